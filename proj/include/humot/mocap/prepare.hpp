#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "humot/io/binary.hpp"
#include "humot/mocap/angular.hpp"
#include "humot/mocap/builtin.hpp"
#include "humot/mocap/bvh.hpp"
#include "humot/mocap/dataset.hpp"
#include "humot/mocap/motion_io.hpp"
#include "humot/rng.hpp"

namespace humot {

struct PrepareOptions {
  double target_fps = kModelFramerate;
  double validation_fraction = 0.1;
  std::string holdout_topology;  // every chunk of this topology goes to validation
  std::vector<std::string> axes{"x", "y", "z"};
  double unit = 1.0;       // meters per input unit
  std::string topology;    // topology id for BVH inputs; derived from the hierarchy when empty

  bool operator==(const PrepareOptions&) const = default;
};

/// One input recording converted to canonical axes and meters.
struct PreparedInput {
  std::string id;
  MotionSequence motion;    // at the source framerate
  SkeletonTemplate generic;
  SourceInfo source;
};

namespace detail {

inline std::string sanitize_id(const std::string& s) {
  std::string out;
  for (char ch : s) out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' ? ch : '_';
  return out.empty() ? "clip" : out;
}

/// Built-in skeleton with exactly these joint names and parents, if any.
inline const SkeletonTemplate* matching_builtin(const SkeletonTopology& topo) {
  for (const auto& id : builtin_skeleton_ids()) {
    const SkeletonTemplate& b = builtin_skeleton(id);
    if (b.topology.joint_names() == topo.joint_names() && b.topology.parents() == topo.parents()) return &b;
  }
  return nullptr;
}

inline std::string hierarchy_id(const SkeletonTopology& topo) {
  io::Writer w;
  for (int j = 0; j < topo.joint_count(); ++j) {
    w.put_string(topo.joint_names()[j]);
    w.put(static_cast<std::int32_t>(topo.parent(j)));
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "skel%d_%08x", topo.joint_count(), io::crc32(w.bytes()));
  return buf;
}

/// Neutral pose usable as a generic: normalized when the landmarks allow
/// it, otherwise root-centred.
inline SkeletonTemplate generic_from_pose(const SkeletonTemplate& t) {
  const Landmarks& lm = t.topology.landmarks();
  if (lm.left_hip >= 0 && lm.right_hip >= 0 && lm.left_shoulder >= 0 && lm.right_shoulder >= 0)
    return normalize_template(t);
  JointPositions pos = t.positions;
  const Eigen::RowVector3d root = pos.row(t.topology.root());
  for (int j = 0; j < pos.rows(); ++j) pos.row(j) -= root;
  return SkeletonTemplate(t.topology, std::move(pos), true);
}

inline SkeletonTemplate rest_pose(const AngularClip& clip) {
  AngularClip rest;
  rest.topology = clip.topology;
  rest.offsets = clip.offsets;
  rest.framerate = clip.framerate;
  rest.rotations.assign(1, std::vector<Quat>(clip.joint_count(), Quat::Identity()));
  rest.root_translation.assign(1, Vec3::Zero());
  const MotionSequence fk = forward_kinematics(rest);
  JointPositions pos(clip.joint_count(), 3);
  for (int j = 0; j < clip.joint_count(); ++j) pos.row(j) = fk.point(j, 0).transpose();
  return SkeletonTemplate(clip.topology, std::move(pos));
}

}  // namespace detail

/// Loads a .bvh or .hmmo recording and maps it to canonical axes and
/// meters. Angular inputs are resampled on rotations, positional inputs on
/// positions.
inline PreparedInput load_input(const std::filesystem::path& path, const PrepareOptions& opt) {
  const AxisConversion conv = AxisConversion::parse(opt.axes, opt.unit);
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  PreparedInput in;
  in.id = detail::sanitize_id(path.stem().string());
  in.source.id = in.id;
  in.source.axes = opt.axes;
  in.source.unit = opt.unit;
  if (ext == ".bvh") {
    const BvhFile bvh = load_bvh(path);
    AngularClip clip = bvh_to_clip(bvh, opt.topology.empty() ? "bvh" : opt.topology);
    const SkeletonTemplate* builtin = detail::matching_builtin(clip.topology);
    if (builtin && (opt.topology.empty() || opt.topology == builtin->topology.id()))
      clip.topology = builtin->topology;
    else if (opt.topology.empty())
      clip.topology = SkeletonTopology(detail::hierarchy_id(clip.topology), clip.topology.joint_names(),
                                       clip.topology.parents(), clip.topology.major_mask(), clip.topology.landmarks());
    in.source.framerate = clip.framerate;
    clip = convert_axes(clip, conv);
    in.generic = builtin && builtin->topology.id() == clip.topology.id() ? *builtin
                                                                         : detail::generic_from_pose(detail::rest_pose(clip));
    in.motion = forward_kinematics(resample(clip, opt.target_fps));
    return in;
  }
  if (ext == ".hmmo") {
    MotionFile f = load_motion(path);
    in.source.framerate = f.motion.framerate();
    const SkeletonTemplate* builtin = detail::matching_builtin(f.skeleton.topology);
    if (builtin && builtin->topology.id() == f.skeleton.topology.id() &&
        builtin->topology.same_structure(f.skeleton.topology))
      in.generic = *builtin;
    else
      in.generic = detail::generic_from_pose(f.skeleton);
    in.motion = resample(convert_axes(f.motion, conv), opt.target_fps);
    return in;
  }
  throw DataError(path.string() + ": unsupported input format '" + ext + "' (expected .bvh or .hmmo)");
}

/// Split of chunk `index`: the held-out topology always goes to
/// validation, other chunks with probability `validation_fraction`.
inline Split assign_split(const std::string& topology, std::size_t index, const PrepareOptions& opt,
                          std::uint64_t seed) {
  if (!opt.holdout_topology.empty() && topology == opt.holdout_topology) return Split::kValidation;
  Rng rng(derive_seed(seed, {0x5b17, index}));
  return rng.uniform() < opt.validation_fraction ? Split::kValidation : Split::kTrain;
}

/// Resample, convert and chunk every input into one dataset. One template
/// per input, fitted to its median bone lengths.
inline Dataset build_dataset(const std::vector<PreparedInput>& inputs, const PrepareOptions& opt, std::uint64_t seed) {
  Dataset ds;
  std::set<std::string> used;
  for (const auto& in : inputs) {
    const std::string& topo_id = in.generic.topology.id();
    auto [git, fresh] = ds.generics.emplace(topo_id, in.generic);
    if (!fresh && !git->second.topology.same_structure(in.generic.topology))
      throw DataError(in.id + ": topology '" + topo_id + "' already used with a different hierarchy");
    std::string tid = in.id;
    for (int k = 2; used.count(tid); ++k) tid = in.id + "_" + std::to_string(k);
    used.insert(tid);
    ds.templates.emplace(tid, template_from_sequence(in.motion, git->second));
    ds.sources.push_back(in.source);
    ds.sources.back().id = tid;
    for (Chunk& c : extract_chunks(in.motion)) {
      c.positions = quantize_float32(c.positions);
      c.template_ref = tid;
      c.source_id = tid;
      c.split = assign_split(topo_id, ds.chunks.size(), opt, seed);
      ds.chunks.push_back(std::move(c));
    }
  }
  return ds;
}

}  // namespace humot
