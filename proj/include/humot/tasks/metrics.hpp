#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <string>
#include <vector>

#include "humot/skeleton.hpp"

namespace humot {

inline constexpr double kCentimetersPerMeter = 100.0;

/// Mean per-joint position error over joints and frames, in centimeters.
inline double mpjpe(const MotionSequence& a, const MotionSequence& b) {
  if (a.joint_count() != b.joint_count() || a.frame_count() != b.frame_count())
    throw DataError("mpjpe: sequences have different shapes");
  double sum = 0.0;
  for (int j = 0; j < a.joint_count(); ++j)
    for (int f = 0; f < a.frame_count(); ++f) sum += (a.point(j, f) - b.point(j, f)).norm();
  return kCentimetersPerMeter * sum / (static_cast<double>(a.joint_count()) * a.frame_count());
}

/// MPJPE restricted to the listed joints, in centimeters.
inline double mpjpe(const MotionSequence& a, const MotionSequence& b, const std::vector<int>& joints) {
  if (a.joint_count() != b.joint_count() || a.frame_count() != b.frame_count())
    throw DataError("mpjpe: sequences have different shapes");
  if (joints.empty()) throw DataError("mpjpe: empty joint selection");
  double sum = 0.0;
  for (int j : joints)
    for (int f = 0; f < a.frame_count(); ++f) sum += (a.point(j, f) - b.point(j, f)).norm();
  return kCentimetersPerMeter * sum / (static_cast<double>(joints.size()) * a.frame_count());
}

/// Vertical extent of the neutral pose from the lowest foot to head_top.
inline double skeleton_height(const SkeletonTemplate& t) {
  const Landmarks& lm = t.topology.landmarks();
  if (lm.head_top < 0 || (lm.left_foot < 0 && lm.right_foot < 0))
    throw DataError("skeleton_height: template '" + t.topology.id() + "' lacks head_top or foot landmarks");
  double foot = std::numeric_limits<double>::infinity();
  for (int j : {lm.left_foot, lm.right_foot})
    if (j >= 0) foot = std::min(foot, t.positions(j, 2));
  return t.positions(lm.head_top, 2) - foot;
}

/// MPJPE divided by the skeleton height; unitless when both use the same
/// length unit.
inline double normalized_mpjpe(const MotionSequence& a, const MotionSequence& b, const SkeletonTemplate& t) {
  return mpjpe(a, b) / (kCentimetersPerMeter * skeleton_height(t));
}

/// Mean of the left and right hip-to-foot chain lengths of a template.
inline double leg_length(const SkeletonTemplate& t) {
  const auto& topo = t.topology;
  const Landmarks& lm = topo.landmarks();
  auto chain = [&](int foot, int hip) {
    if (foot < 0) return -1.0;
    double len = 0.0;
    int j = foot;
    while (j >= 0 && j != hip && j != topo.root()) {
      const int p = topo.parent(j);
      len += (t.positions.row(j) - t.positions.row(p)).norm();
      j = p;
    }
    return j == hip ? len : -1.0;
  };
  double total = 0.0;
  int n = 0;
  for (auto [foot, hip] : {std::pair{lm.left_foot, lm.left_hip}, std::pair{lm.right_foot, lm.right_hip}}) {
    if (hip < 0) continue;
    const double l = chain(foot, hip);
    if (l > 0) {
      total += l;
      ++n;
    }
  }
  if (n == 0) throw DataError("leg_length: template '" + topo.id() + "' has no hip-to-foot chain");
  return total / n;
}

}  // namespace humot
