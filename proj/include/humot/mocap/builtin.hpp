#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "humot/skeleton.hpp"

namespace humot {

namespace detail {

struct JointSpec {
  const char* name;
  const char* parent;  // nullptr for the root
  bool major;
  double x, y, z;      // neutral pose, meters, Z up, facing +Y, right side toward +X
};

inline SkeletonTemplate build_builtin(const std::string& id, const std::vector<JointSpec>& specs,
                                      const char* left_foot, const char* right_foot) {
  std::vector<std::string> names;
  std::vector<bool> major;
  for (const auto& s : specs) {
    names.emplace_back(s.name);
    major.push_back(s.major);
  }
  auto find = [&](std::string_view n) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return static_cast<int>(i);
    return -1;
  };
  std::vector<int> parents;
  for (const auto& s : specs) parents.push_back(s.parent ? find(s.parent) : -1);
  Landmarks lm;
  lm.pelvis = find("pelvis");
  lm.left_hip = find("l_hip");
  lm.right_hip = find("r_hip");
  lm.left_shoulder = find("l_shoulder");
  lm.right_shoulder = find("r_shoulder");
  lm.head_top = find("head_top");
  lm.left_foot = find(left_foot);
  lm.right_foot = find(right_foot);
  JointPositions pos(specs.size(), 3);
  for (std::size_t i = 0; i < specs.size(); ++i) pos.row(i) << specs[i].x, specs[i].y, specs[i].z;
  SkeletonTopology topo(id, std::move(names), std::move(parents), std::move(major), lm);
  return normalize_template(SkeletonTemplate(std::move(topo), std::move(pos)));
}

}  // namespace detail

/// 17-joint generic neutral pose (single spine, head and head top).
inline const SkeletonTemplate& builtin_skeleton17() {
  static const SkeletonTemplate t = detail::build_builtin(
      "body17",
      {
          {"pelvis", nullptr, false, 0.0, 0.0, 0.0},
          {"r_hip", "pelvis", true, 0.11, 0.0, -0.05},
          {"r_knee", "r_hip", true, 0.11, 0.01, -0.48},
          {"r_ankle", "r_knee", true, 0.11, -0.02, -0.90},
          {"l_hip", "pelvis", true, -0.11, 0.0, -0.05},
          {"l_knee", "l_hip", true, -0.11, 0.01, -0.48},
          {"l_ankle", "l_knee", true, -0.11, -0.02, -0.90},
          {"spine", "pelvis", false, 0.0, -0.01, 0.24},
          {"neck", "spine", false, 0.0, 0.0, 0.50},
          {"head", "neck", false, 0.0, 0.03, 0.61},
          {"head_top", "head", false, 0.0, 0.0, 0.76},
          {"l_shoulder", "neck", true, -0.18, 0.0, 0.46},
          {"l_elbow", "l_shoulder", true, -0.21, 0.0, 0.18},
          {"l_wrist", "l_elbow", true, -0.22, 0.03, -0.07},
          {"r_shoulder", "neck", true, 0.18, 0.0, 0.46},
          {"r_elbow", "r_shoulder", true, 0.21, 0.0, 0.18},
          {"r_wrist", "r_elbow", true, 0.22, 0.03, -0.07},
      },
      "l_ankle", "r_ankle");
  return t;
}

/// 23-joint generic neutral pose (three spine joints, collars and toes).
inline const SkeletonTemplate& builtin_skeleton23() {
  static const SkeletonTemplate t = detail::build_builtin(
      "body23",
      {
          {"pelvis", nullptr, false, 0.0, 0.0, 0.0},
          {"l_hip", "pelvis", true, -0.09, 0.0, -0.07},
          {"l_knee", "l_hip", true, -0.10, 0.01, -0.50},
          {"l_ankle", "l_knee", true, -0.10, -0.03, -0.90},
          {"l_toe", "l_ankle", false, -0.11, 0.12, -0.96},
          {"r_hip", "pelvis", true, 0.09, 0.0, -0.07},
          {"r_knee", "r_hip", true, 0.10, 0.01, -0.50},
          {"r_ankle", "r_knee", true, 0.10, -0.03, -0.90},
          {"r_toe", "r_ankle", false, 0.11, 0.12, -0.96},
          {"spine1", "pelvis", false, 0.0, -0.01, 0.11},
          {"spine2", "spine1", false, 0.0, -0.02, 0.24},
          {"spine3", "spine2", false, 0.0, -0.01, 0.37},
          {"neck", "spine3", false, 0.0, 0.0, 0.52},
          {"head", "neck", false, 0.0, 0.03, 0.60},
          {"head_top", "head", false, 0.0, 0.01, 0.78},
          {"l_collar", "spine3", false, -0.05, 0.0, 0.45},
          {"l_shoulder", "l_collar", true, -0.19, 0.0, 0.46},
          {"l_elbow", "l_shoulder", true, -0.21, -0.01, 0.17},
          {"l_wrist", "l_elbow", true, -0.22, 0.02, -0.08},
          {"r_collar", "spine3", false, 0.05, 0.0, 0.45},
          {"r_shoulder", "r_collar", true, 0.19, 0.0, 0.46},
          {"r_elbow", "r_shoulder", true, 0.21, -0.01, 0.17},
          {"r_wrist", "r_elbow", true, 0.22, 0.02, -0.08},
      },
      "l_toe", "r_toe");
  return t;
}

inline std::vector<std::string> builtin_skeleton_ids() { return {"body17", "body23"}; }

inline const SkeletonTemplate& builtin_skeleton(std::string_view id) {
  if (id == "body17") return builtin_skeleton17();
  if (id == "body23") return builtin_skeleton23();
  throw DataError("unknown built-in skeleton '" + std::string(id) + "'");
}

}  // namespace humot
