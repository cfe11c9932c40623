#pragma once

#include <Eigen/Geometry>

#include <cmath>
#include <vector>

#include "humot/skeleton.hpp"

namespace humot {

using Quat = Eigen::Quaterniond;

/// Angular pose representation: fixed local offsets plus per-frame local
/// rotations and a root translation track.
struct AngularClip {
  SkeletonTopology topology;
  JointPositions offsets;               // J x 3, local offset from the parent (root: rest position)
  std::vector<std::vector<Quat>> rotations;  // [frame][joint], local rotations
  std::vector<Vec3> root_translation;   // [frame], added to the root offset
  double framerate = 30.0;

  int joint_count() const { return topology.joint_count(); }
  int frame_count() const { return static_cast<int>(rotations.size()); }

  void validate(double unit_tolerance = 1e-6) const {
    if (offsets.rows() != joint_count()) throw DataError("angular clip: offsets do not match joint count");
    if (rotations.empty()) throw DataError("angular clip: no frames");
    if (root_translation.size() != rotations.size())
      throw DataError("angular clip: root translation track length differs from rotation track");
    if (!(framerate > 0.0)) throw DataError("angular clip: framerate must be positive");
    for (const auto& frame : rotations) {
      if (static_cast<int>(frame.size()) != joint_count()) throw DataError("angular clip: wrong rotation count");
      for (const Quat& q : frame)
        if (!(std::abs(q.norm() - 1.0) <= unit_tolerance))
          throw DataError("angular clip: non-unit quaternion (norm " + std::to_string(q.norm()) + ")");
    }
  }
};

/// Global positions from local rotations, composed root-outward.
inline MotionSequence forward_kinematics(const AngularClip& clip) {
  clip.validate();
  const auto& topo = clip.topology;
  const int J = clip.joint_count();
  const int F = clip.frame_count();
  MotionSequence out(topo, F, clip.framerate);
  std::vector<Mat3> global_rot(J);
  std::vector<Vec3> global_pos(J);
  for (int f = 0; f < F; ++f) {
    for (int j : topo.traversal_order()) {
      const Mat3 local = clip.rotations[f][j].toRotationMatrix();
      const int p = topo.parent(j);
      if (p < 0) {
        global_pos[j] = clip.offsets.row(j).transpose() + clip.root_translation[f];
        global_rot[j] = local;
      } else {
        global_pos[j] = global_pos[p] + global_rot[p] * clip.offsets.row(j).transpose();
        global_rot[j] = global_rot[p] * local;
      }
      out.set_point(j, f, global_pos[j]);
    }
  }
  return out;
}

namespace detail {

/// Output frame count for resampling: the largest F' with
/// (F' - 1) / target <= (F - 1) / source. First frames coincide.
inline int resampled_frame_count(int frames, double source_fps, double target_fps) {
  if (!(source_fps > 0.0) || !(target_fps > 0.0)) throw DataError("resample: framerates must be positive");
  const double duration = (frames - 1) / source_fps;
  return static_cast<int>(std::floor(duration * target_fps + 1e-9)) + 1;
}

struct Bracket {
  int lo;
  int hi;
  double alpha;
};

inline Bracket bracket(int i, int frames, double source_fps, double target_fps) {
  const double s = i * source_fps / target_fps;
  int lo = static_cast<int>(std::floor(s));
  if (lo >= frames - 1) return {frames - 1, frames - 1, 0.0};
  if (lo < 0) return {0, 0, 0.0};
  return {lo, lo + 1, s - lo};
}

}  // namespace detail

/// Piecewise-linear resampling of joint positions.
inline MotionSequence resample(const MotionSequence& seq, double target_fps) {
  const int F = seq.frame_count();
  const int out_frames = detail::resampled_frame_count(F, seq.framerate(), target_fps);
  MotionSequence out(seq.topology(), out_frames, target_fps);
  for (int i = 0; i < out_frames; ++i) {
    const auto [lo, hi, a] = detail::bracket(i, F, seq.framerate(), target_fps);
    for (int j = 0; j < seq.joint_count(); ++j)
      for (int ax = 0; ax < 3; ++ax)
        out.at(j, ax, i) = a == 0.0 ? seq.at(j, ax, lo) : (1.0 - a) * seq.at(j, ax, lo) + a * seq.at(j, ax, hi);
  }
  return out;
}

/// Spherical linear interpolation of rotations, linear for the root track.
inline AngularClip resample(const AngularClip& clip, double target_fps) {
  clip.validate();
  const int F = clip.frame_count();
  const int out_frames = detail::resampled_frame_count(F, clip.framerate, target_fps);
  AngularClip out;
  out.topology = clip.topology;
  out.offsets = clip.offsets;
  out.framerate = target_fps;
  out.rotations.resize(out_frames);
  out.root_translation.resize(out_frames);
  for (int i = 0; i < out_frames; ++i) {
    const auto [lo, hi, a] = detail::bracket(i, F, clip.framerate, target_fps);
    out.root_translation[i] =
        a == 0.0 ? clip.root_translation[lo] : Vec3((1.0 - a) * clip.root_translation[lo] + a * clip.root_translation[hi]);
    out.rotations[i].resize(clip.joint_count());
    for (int j = 0; j < clip.joint_count(); ++j)
      out.rotations[i][j] = a == 0.0 ? clip.rotations[lo][j] : clip.rotations[lo][j].slerp(a, clip.rotations[hi][j]);
  }
  return out;
}

}  // namespace humot
