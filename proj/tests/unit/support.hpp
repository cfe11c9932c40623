#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "humot/humot.hpp"

namespace humot::test {

inline SkeletonTopology chain_topology(int joints, const std::string& id = "chain") {
  std::vector<std::string> names;
  std::vector<int> parents;
  for (int j = 0; j < joints; ++j) {
    names.push_back("j" + std::to_string(j));
    parents.push_back(j - 1);
  }
  Landmarks lm;
  lm.pelvis = 0;
  return SkeletonTopology(id, names, parents, std::vector<bool>(joints, false), lm);
}

/// Random tree: joint i > 0 hangs off a uniformly chosen earlier joint.
inline SkeletonTopology random_tree_topology(int joints, std::uint64_t seed, const std::string& id = "tree") {
  Rng rng(seed);
  std::vector<std::string> names;
  std::vector<int> parents;
  std::vector<bool> major;
  for (int j = 0; j < joints; ++j) {
    names.push_back("n" + std::to_string(j));
    parents.push_back(j == 0 ? -1 : static_cast<int>(rng.below(j)));
    major.push_back(j % 3 == 1);
  }
  Landmarks lm;
  lm.pelvis = 0;
  return SkeletonTopology(id, names, parents, major, lm);
}

inline MotionSequence random_motion(const SkeletonTopology& topo, int frames, std::uint64_t seed, double fps = 30.0) {
  Rng rng(seed);
  MotionSequence seq(topo, frames, fps);
  for (double& v : seq.data()) v = rng.uniform(-1.0, 1.0);
  return seq;
}

/// Template whose joints sit at random offsets from their parents.
inline SkeletonTemplate random_template(const SkeletonTopology& topo, std::uint64_t seed) {
  Rng rng(seed);
  JointPositions pos(topo.joint_count(), 3);
  for (int j : topo.traversal_order()) {
    const int p = topo.parent(j);
    Vec3 off(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(0.05, 0.3));
    if (p < 0)
      pos.row(j).setZero();
    else
      pos.row(j) = pos.row(p) + off.transpose();
  }
  return SkeletonTemplate(topo, pos, true);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("humot_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Mat3 rotation_x(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix(); }

}  // namespace humot::test
