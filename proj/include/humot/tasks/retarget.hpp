#pragma once

#include <algorithm>
#include <vector>

#include "humot/mocap/chunks.hpp"
#include "humot/model/autoencoder.hpp"
#include "humot/tasks/metrics.hpp"

namespace humot {

struct RetargetOptions {
  /// Process overlapping windows, each translated to zero major-joint mean
  /// and translated back afterwards. When false the whole sequence goes
  /// through the model unchanged in one pass.
  bool windowed = true;
  int window = kChunkFrames;
  int stride = kChunkStride;
};

/// Window start frames: every `stride` frames, plus a final window ending on
/// the last frame. Sequences shorter than a window use one window.
inline std::vector<int> window_starts(int frames, int window, int stride) {
  if (window < 1 || stride < 1) throw UsageError("window and stride must be positive");
  if (frames <= window) return {0};
  std::vector<int> starts;
  for (int s = 0; s + window <= frames; s += stride) starts.push_back(s);
  if (starts.back() + window < frames) starts.push_back(frames - window);
  return starts;
}

/// Cross-fade weight of frame i inside a window of length n.
inline double window_weight(int i, int n) { return static_cast<double>(std::min(i + 1, n - i)); }

/// Ratio of target to source leg length, applied to the restored trajectory.
inline double leg_length_ratio(const SkeletonTemplate& source, const SkeletonTemplate& target) {
  return leg_length(target) / leg_length(source);
}

/// D(E(seq | source) | target), windowed with cross-fading. Each window's
/// removed mean position is restored scaled by the leg length ratio.
template <typename T>
MotionSequence retarget(const MotionSequence& seq, const SkeletonTemplate& source, const SkeletonTemplate& target,
                        const MotionAutoencoder<T>& model, const RetargetOptions& opt = {}) {
  if (!seq.topology().same_structure(source.topology))
    throw DataError("retarget: sequence does not match the source template");
  if (!opt.windowed) return decode(encode(seq, source, model), target, model, seq.framerate());

  const int F = seq.frame_count();
  const int W = std::min(opt.window, F);
  const double ratio = leg_length_ratio(source, target);
  const auto mask = normalization_mask(seq.topology());
  const int Jt = target.joint_count();
  std::vector<double> acc(static_cast<std::size_t>(Jt) * 3 * F, 0.0);
  std::vector<double> weight(F, 0.0);
  for (int start : window_starts(F, W, opt.stride)) {
    const MotionSequence win = slice_frames(seq, start, W);
    const Vec3 mean = masked_mean_position(win, mask);
    const MotionSequence out = decode(encode(translate(win, -mean), source, model), target, model, seq.framerate());
    const Vec3 restored = ratio * mean;
    for (int i = 0; i < W; ++i) {
      const double w = window_weight(i, W);
      weight[start + i] += w;
      for (int j = 0; j < Jt; ++j)
        for (int a = 0; a < 3; ++a)
          acc[(static_cast<std::size_t>(j) * 3 + a) * F + start + i] += w * (out.at(j, a, i) + restored[a]);
    }
  }
  MotionSequence result(target.topology, F, seq.framerate());
  for (int j = 0; j < Jt; ++j)
    for (int a = 0; a < 3; ++a)
      for (int f = 0; f < F; ++f) result.at(j, a, f) = acc[(static_cast<std::size_t>(j) * 3 + a) * F + f] / weight[f];
  return result;
}

/// Per-window trajectory restored by retarget(): mean major-joint position
/// of each window scaled by the leg length ratio.
inline std::vector<Vec3> retarget_trajectory(const MotionSequence& seq, const SkeletonTemplate& source,
                                             const SkeletonTemplate& target, const RetargetOptions& opt = {}) {
  const int F = seq.frame_count();
  const int W = std::min(opt.window, F);
  const double ratio = leg_length_ratio(source, target);
  const auto mask = normalization_mask(seq.topology());
  std::vector<Vec3> out;
  for (int start : window_starts(F, W, opt.stride))
    out.push_back(ratio * masked_mean_position(slice_frames(seq, start, W), mask));
  return out;
}

}  // namespace humot
