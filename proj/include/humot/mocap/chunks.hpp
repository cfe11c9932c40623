#pragma once

#include <string>
#include <vector>

#include "humot/skeleton.hpp"

namespace humot {

inline constexpr int kChunkFrames = 30;
inline constexpr int kChunkStride = 6;  // 30-frame windows overlapping over 24 frames
inline constexpr double kModelFramerate = 30.0;

enum class Split { kTrain, kValidation };

inline const char* to_string(Split s) { return s == Split::kTrain ? "train" : "validation"; }

/// A fixed-length training window translated so that its major joints have
/// zero mean over all frames.
struct Chunk {
  MotionSequence positions;
  Vec3 mean_offset = Vec3::Zero();
  std::string template_ref;
  std::string source_id;
  int start_frame = 0;
  Split split = Split::kTrain;
};

inline int chunk_count(int frames) {
  return frames < kChunkFrames ? 0 : (frames - kChunkFrames) / kChunkStride + 1;
}

/// Mean position over the joints flagged in `mask` and over all frames.
inline Vec3 masked_mean_position(const MotionSequence& seq, const std::vector<bool>& mask) {
  Vec3 sum = Vec3::Zero();
  long count = 0;
  for (int j = 0; j < seq.joint_count(); ++j) {
    if (!mask[j]) continue;
    for (int f = 0; f < seq.frame_count(); ++f) sum += seq.point(j, f);
    count += seq.frame_count();
  }
  if (count == 0) throw DataError("mean position: no joints selected");
  return sum / static_cast<double>(count);
}

/// Major joints, or every joint when the topology flags none.
inline std::vector<bool> normalization_mask(const SkeletonTopology& topo) {
  std::vector<bool> mask = topo.major_mask();
  for (bool m : mask)
    if (m) return mask;
  return std::vector<bool>(topo.joint_count(), true);
}

inline MotionSequence translate(const MotionSequence& seq, const Vec3& delta) {
  MotionSequence out = seq;
  for (int j = 0; j < seq.joint_count(); ++j)
    for (int a = 0; a < 3; ++a)
      for (int f = 0; f < seq.frame_count(); ++f) out.at(j, a, f) += delta[a];
  return out;
}

inline MotionSequence slice_frames(const MotionSequence& seq, int start, int count) {
  if (start < 0 || count < 1 || start + count > seq.frame_count()) throw DataError("frame slice out of range");
  MotionSequence out(seq.topology(), count, seq.framerate());
  for (int j = 0; j < seq.joint_count(); ++j)
    for (int a = 0; a < 3; ++a)
      for (int f = 0; f < count; ++f) out.at(j, a, f) = seq.at(j, a, start + f);
  return out;
}

/// Overlapping 30-frame windows with stride 6, each normalized separately.
/// Sequences shorter than one window yield no chunks.
inline std::vector<Chunk> extract_chunks(const MotionSequence& seq, const std::vector<bool>& major_mask) {
  if (static_cast<int>(major_mask.size()) != seq.joint_count())
    throw DataError("extract_chunks: mask size differs from joint count");
  std::vector<Chunk> chunks;
  const int n = chunk_count(seq.frame_count());
  chunks.reserve(n);
  for (int c = 0; c < n; ++c) {
    const int start = c * kChunkStride;
    MotionSequence window = slice_frames(seq, start, kChunkFrames);
    const Vec3 mean = masked_mean_position(window, major_mask);
    Chunk chunk;
    chunk.positions = translate(window, -mean);
    chunk.mean_offset = mean;
    chunk.start_frame = start;
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

inline std::vector<Chunk> extract_chunks(const MotionSequence& seq) {
  return extract_chunks(seq, normalization_mask(seq.topology()));
}

}  // namespace humot
