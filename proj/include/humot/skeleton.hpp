#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "humot/error.hpp"
#include "humot/rng.hpp"

namespace humot {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
/// J x 3 joint positions, one row per joint.
using JointPositions = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Joint indices of anatomical landmarks; -1 when the topology lacks one
/// (subsampled topologies may lose any landmark except the pelvis).
struct Landmarks {
  int pelvis = -1;
  int left_hip = -1;
  int right_hip = -1;
  int left_shoulder = -1;
  int right_shoulder = -1;
  int head_top = -1;
  int left_foot = -1;
  int right_foot = -1;

  bool operator==(const Landmarks&) const = default;

  template <typename Fn>
  void for_each(Fn&& fn) {
    fn("pelvis", pelvis);
    fn("left_hip", left_hip);
    fn("right_hip", right_hip);
    fn("left_shoulder", left_shoulder);
    fn("right_shoulder", right_shoulder);
    fn("head_top", head_top);
    fn("left_foot", left_foot);
    fn("right_foot", right_foot);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    const_cast<Landmarks*>(this)->for_each([&](const char* name, int& idx) { fn(name, static_cast<const int&>(idx)); });
  }
};

/// Named joints linked into a single tree rooted at the pelvis.
class SkeletonTopology {
 public:
  SkeletonTopology() = default;

  SkeletonTopology(std::string id, std::vector<std::string> joint_names, std::vector<int> parents,
                   std::vector<bool> major_mask, Landmarks landmarks)
      : id_(std::move(id)),
        names_(std::move(joint_names)),
        parents_(std::move(parents)),
        major_(std::move(major_mask)),
        landmarks_(landmarks) {
    validate();
    build_orders();
  }

  const std::string& id() const { return id_; }
  int joint_count() const { return static_cast<int>(names_.size()); }
  int bone_count() const { return joint_count() - 1; }
  int root() const { return landmarks_.pelvis; }

  const std::vector<std::string>& joint_names() const { return names_; }
  const std::vector<int>& parents() const { return parents_; }
  const std::vector<bool>& major_mask() const { return major_; }
  const Landmarks& landmarks() const { return landmarks_; }
  int parent(int joint) const { return parents_[joint]; }
  bool is_major(int joint) const { return major_[joint]; }

  /// Child joint of every bone, in ascending joint order. Bone b connects
  /// bone_joints()[b] to its parent.
  const std::vector<int>& bone_joints() const { return bones_; }

  /// Root-outward order: every joint appears after its parent.
  const std::vector<int>& traversal_order() const { return order_; }

  int index_of(std::string_view name) const {
    for (int j = 0; j < joint_count(); ++j)
      if (names_[j] == name) return j;
    return -1;
  }

  /// Same joints, links and flags; the id is a label and is ignored.
  bool same_structure(const SkeletonTopology& other) const {
    return names_ == other.names_ && parents_ == other.parents_ && major_ == other.major_ &&
           landmarks_ == other.landmarks_;
  }

  bool operator==(const SkeletonTopology& other) const { return id_ == other.id_ && same_structure(other); }

 private:
  void validate() const {
    const int J = joint_count();
    if (J < 2) throw DataError("topology '" + id_ + "': needs at least 2 joints");
    if (static_cast<int>(parents_.size()) != J || static_cast<int>(major_.size()) != J)
      throw DataError("topology '" + id_ + "': parents/major mask size differs from joint count");
    int roots = 0;
    for (int j = 0; j < J; ++j) {
      if (parents_[j] < 0) {
        ++roots;
        if (parents_[j] != -1) throw DataError("topology '" + id_ + "': invalid parent index");
      } else if (parents_[j] >= J || parents_[j] == j) {
        throw DataError("topology '" + id_ + "': parent index out of range for joint " + names_[j]);
      }
    }
    if (roots != 1) throw DataError("topology '" + id_ + "': expected exactly one root, found " + std::to_string(roots));
    if (landmarks_.pelvis < 0 || landmarks_.pelvis >= J || parents_[landmarks_.pelvis] != -1)
      throw DataError("topology '" + id_ + "': the pelvis landmark must be the root");
    landmarks_.for_each([&](const char* name, const int& idx) {
      if (idx < -1 || idx >= J) throw DataError("topology '" + id_ + "': landmark " + name + " out of range");
    });
    // Every joint must reach the root without revisiting a joint.
    for (int j = 0; j < J; ++j) {
      int cur = j;
      for (int steps = 0; parents_[cur] >= 0; ++steps) {
        if (steps > J) throw DataError("topology '" + id_ + "': cycle through joint " + names_[j]);
        cur = parents_[cur];
      }
    }
  }

  void build_orders() {
    const int J = joint_count();
    bones_.clear();
    for (int j = 0; j < J; ++j)
      if (parents_[j] >= 0) bones_.push_back(j);
    std::vector<std::vector<int>> children(J);
    for (int j = 0; j < J; ++j)
      if (parents_[j] >= 0) children[parents_[j]].push_back(j);
    order_.clear();
    order_.push_back(root());
    for (std::size_t i = 0; i < order_.size(); ++i)
      for (int c : children[order_[i]]) order_.push_back(c);
  }

  std::string id_;
  std::vector<std::string> names_;
  std::vector<int> parents_;
  std::vector<bool> major_;
  Landmarks landmarks_;
  std::vector<int> bones_;
  std::vector<int> order_;
};

/// Global joint positions over time, stored J x 3 x F (joint-major, then
/// axis, then frame).
class MotionSequence {
 public:
  MotionSequence() = default;

  MotionSequence(SkeletonTopology topology, int frames, double framerate)
      : topology_(std::move(topology)), frames_(frames), framerate_(framerate) {
    if (frames < 1) throw DataError("motion sequence needs at least one frame");
    if (!(framerate > 0.0)) throw DataError("motion sequence framerate must be positive");
    data_.assign(static_cast<std::size_t>(joint_count()) * 3 * frames, 0.0);
  }

  MotionSequence(SkeletonTopology topology, std::vector<double> data, int frames, double framerate)
      : MotionSequence(std::move(topology), frames, framerate) {
    if (data.size() != data_.size()) throw DataError("motion sequence data size does not match J x 3 x F");
    data_ = std::move(data);
    validate();
  }

  const SkeletonTopology& topology() const { return topology_; }
  int joint_count() const { return topology_.joint_count(); }
  int frame_count() const { return frames_; }
  double framerate() const { return framerate_; }

  double& at(int joint, int axis, int frame) { return data_[index(joint, axis, frame)]; }
  double at(int joint, int axis, int frame) const { return data_[index(joint, axis, frame)]; }

  Vec3 point(int joint, int frame) const {
    return {at(joint, 0, frame), at(joint, 1, frame), at(joint, 2, frame)};
  }
  void set_point(int joint, int frame, const Vec3& p) {
    for (int a = 0; a < 3; ++a) at(joint, a, frame) = p[a];
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  void validate() const {
    for (double v : data_)
      if (!std::isfinite(v)) throw DataError("motion sequence contains non-finite values");
  }

 private:
  std::size_t index(int joint, int axis, int frame) const {
    return (static_cast<std::size_t>(joint) * 3 + axis) * frames_ + frame;
  }

  SkeletonTopology topology_;
  int frames_ = 0;
  double framerate_ = 30.0;
  std::vector<double> data_;
};

/// Static neutral pose conditioning the model on topology and morphology.
struct SkeletonTemplate {
  SkeletonTopology topology;
  JointPositions positions;
  bool normalized = false;

  SkeletonTemplate() = default;
  SkeletonTemplate(SkeletonTopology topo, JointPositions pos, bool is_normalized = false)
      : topology(std::move(topo)), positions(std::move(pos)), normalized(is_normalized) {
    if (positions.rows() != topology.joint_count())
      throw DataError("template '" + topology.id() + "': position rows do not match joint count");
    if (!positions.allFinite()) throw DataError("template '" + topology.id() + "': non-finite positions");
    for (int j : topology.bone_joints())
      if (!((positions.row(j) - positions.row(topology.parent(j))).norm() > 0.0))
        throw DataError("template '" + topology.id() + "': zero-length bone at joint " + topology.joint_names()[j]);
  }

  int joint_count() const { return topology.joint_count(); }
  Vec3 joint(int j) const { return positions.row(j).transpose(); }
};

/// Joints retained by a subsampling draw.
struct JointSubset {
  std::vector<int> kept;              // sorted original indices
  std::vector<int> remapped_parents;  // index into `kept`, -1 for the root
  bool pelvis_kept = true;

  bool is_identity(int joint_count) const { return static_cast<int>(kept.size()) == joint_count; }
};

// ---------------------------------------------------------------------------

/// Standard median; even-length series average the two middle values.
inline double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty series");
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

/// Per-bone length series, B x F in meters.
inline Eigen::MatrixXd bone_lengths(const MotionSequence& seq) {
  const auto& topo = seq.topology();
  const auto& bones = topo.bone_joints();
  if (static_cast<int>(bones.size()) != topo.joint_count() - 1)
    throw DataError("topology '" + topo.id() + "' has unlinked joints");
  const int F = seq.frame_count();
  Eigen::MatrixXd out(bones.size(), F);
  for (std::size_t b = 0; b < bones.size(); ++b) {
    const int j = bones[b];
    const int p = topo.parent(j);
    for (int f = 0; f < F; ++f) out(b, f) = (seq.point(j, f) - seq.point(p, f)).norm();
  }
  return out;
}

inline Eigen::VectorXd bone_lengths(const SkeletonTemplate& t) {
  const auto& bones = t.topology.bone_joints();
  Eigen::VectorXd out(bones.size());
  for (std::size_t b = 0; b < bones.size(); ++b)
    out[b] = (t.positions.row(bones[b]) - t.positions.row(t.topology.parent(bones[b]))).norm();
  return out;
}

/// Rigid transform placing the pelvis at the origin, the hip axis along +X
/// (left to right) and the hip-orthogonal part of the pelvis-to-shoulders
/// direction along +Z. Afterwards the transverse plane is XY and the coronal
/// plane is XZ.
inline SkeletonTemplate normalize_template(const SkeletonTemplate& t) {
  const Landmarks& lm = t.topology.landmarks();
  if (lm.left_hip < 0 || lm.right_hip < 0 || lm.left_shoulder < 0 || lm.right_shoulder < 0)
    throw NumericError("normalize_template: '" + t.topology.id() + "' lacks hip or shoulder landmarks");
  const Vec3 pelvis = t.joint(lm.pelvis);
  const Vec3 hip_axis = t.joint(lm.right_hip) - t.joint(lm.left_hip);
  const Vec3 up = 0.5 * (t.joint(lm.left_shoulder) + t.joint(lm.right_shoulder)) - pelvis;
  const double hip_norm = hip_axis.norm();
  const double up_norm = up.norm();
  if (!(hip_norm > 1e-9) || !(up_norm > 1e-9))
    throw NumericError("normalize_template: coincident hip or shoulder landmarks");
  const Vec3 x = hip_axis / hip_norm;
  const Vec3 z_raw = up - up.dot(x) * x;
  if (!(z_raw.norm() > 1e-6 * up_norm))
    throw NumericError("normalize_template: hip axis collinear with the body-up direction");
  const Vec3 z = z_raw.normalized();
  const Vec3 y = z.cross(x);
  Mat3 rot;
  rot.row(0) = x.transpose();
  rot.row(1) = y.transpose();
  rot.row(2) = z.transpose();

  JointPositions out(t.joint_count(), 3);
  for (int j = 0; j < t.joint_count(); ++j) out.row(j) = (rot * (t.joint(j) - pelvis)).transpose();
  out.row(lm.pelvis).setZero();
  return SkeletonTemplate(t.topology, std::move(out), true);
}

/// Rebuilds `generic` with each bone's length set to the temporal median of
/// that bone's length in `seq`, keeping the generic bone directions.
inline SkeletonTemplate template_from_sequence(const MotionSequence& seq, const SkeletonTemplate& generic) {
  if (!generic.normalized) throw DataError("template_from_sequence: generic pose must be normalized");
  if (!generic.topology.same_structure(seq.topology()))
    throw DataError("template_from_sequence: sequence and generic pose topologies differ");
  const auto& topo = generic.topology;
  const Eigen::MatrixXd lengths = bone_lengths(seq);
  const auto& bones = topo.bone_joints();
  std::vector<double> target(topo.joint_count(), 0.0);
  for (std::size_t b = 0; b < bones.size(); ++b) {
    std::vector<double> series(lengths.cols());
    for (int f = 0; f < lengths.cols(); ++f) series[f] = lengths(b, f);
    const double m = median(std::move(series));
    if (!(m > 0.0))
      throw DataError("template_from_sequence: degenerate (zero median) bone at joint " +
                      topo.joint_names()[bones[b]]);
    target[bones[b]] = m;
  }
  JointPositions out(topo.joint_count(), 3);
  for (int j : topo.traversal_order()) {
    const int p = topo.parent(j);
    if (p < 0) {
      out.row(j) = generic.positions.row(j);
      continue;
    }
    const Vec3 dir = (generic.joint(j) - generic.joint(p)).normalized();
    out.row(j) = out.row(p) + target[j] * dir.transpose();
  }
  SkeletonTemplate rebuilt(topo, std::move(out), false);
  const Landmarks& lm = topo.landmarks();
  if (lm.left_hip < 0 || lm.right_hip < 0 || lm.left_shoulder < 0 || lm.right_shoulder < 0) {
    rebuilt.normalized = true;  // directions come from a normalized pose and the root stays fixed
    return rebuilt;
  }
  return normalize_template(rebuilt);
}

// ---------------------------------------------------------------------------
// Joint subsets

/// Builds the remapped-parent structure for an explicit kept set. Each kept
/// joint's parent becomes its nearest kept ancestor.
inline JointSubset make_joint_subset(const SkeletonTopology& topo, std::vector<int> kept) {
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  JointSubset subset;
  subset.pelvis_kept = std::binary_search(kept.begin(), kept.end(), topo.root());
  if (!subset.pelvis_kept) throw DataError("joint subsets must keep the pelvis");
  std::vector<int> new_index(topo.joint_count(), -1);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i] < 0 || kept[i] >= topo.joint_count()) throw DataError("joint subset index out of range");
    new_index[kept[i]] = static_cast<int>(i);
  }
  subset.remapped_parents.resize(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    int p = topo.parent(kept[i]);
    while (p >= 0 && new_index[p] < 0) p = topo.parent(p);
    subset.remapped_parents[i] = p < 0 ? -1 : new_index[p];
  }
  subset.kept = std::move(kept);
  return subset;
}

inline SkeletonTopology apply_subset(const SkeletonTopology& topo, const JointSubset& subset) {
  if (subset.is_identity(topo.joint_count())) return topo;
  std::vector<int> new_index(topo.joint_count(), -1);
  for (std::size_t i = 0; i < subset.kept.size(); ++i) new_index[subset.kept[i]] = static_cast<int>(i);
  std::vector<std::string> names;
  std::vector<bool> major;
  for (int j : subset.kept) {
    names.push_back(topo.joint_names()[j]);
    major.push_back(topo.is_major(j));
  }
  Landmarks lm = topo.landmarks();
  lm.for_each([&](const char*, int& idx) { idx = idx < 0 ? -1 : new_index[idx]; });
  return SkeletonTopology(topo.id() + "~" + std::to_string(subset.kept.size()), std::move(names),
                          subset.remapped_parents, std::move(major), lm);
}

inline MotionSequence apply_subset(const MotionSequence& seq, const JointSubset& subset) {
  if (subset.is_identity(seq.joint_count())) return seq;
  MotionSequence out(apply_subset(seq.topology(), subset), seq.frame_count(), seq.framerate());
  const int F = seq.frame_count();
  for (std::size_t i = 0; i < subset.kept.size(); ++i)
    for (int a = 0; a < 3; ++a)
      for (int f = 0; f < F; ++f) out.at(static_cast<int>(i), a, f) = seq.at(subset.kept[i], a, f);
  return out;
}

inline SkeletonTemplate apply_subset(const SkeletonTemplate& t, const JointSubset& subset) {
  if (subset.is_identity(t.joint_count())) return t;
  JointPositions pos(subset.kept.size(), 3);
  for (std::size_t i = 0; i < subset.kept.size(); ++i) pos.row(i) = t.positions.row(subset.kept[i]);
  // A subset of a normalized pose keeps the pelvis and both planes in place.
  return SkeletonTemplate(apply_subset(t.topology, subset), std::move(pos), t.normalized);
}

/// Independent per-joint drop draw; the pelvis is never dropped. Redraws
/// until at least two joints survive.
inline JointSubset draw_joint_subset(const SkeletonTopology& topo, std::uint64_t seed, double p_major,
                                     double p_other, int max_attempts = 64) {
  if (!(p_major >= 0.0 && p_major <= 1.0 && p_other >= 0.0 && p_other <= 1.0))
    throw DataError("drop probabilities must lie in [0, 1]");
  Rng rng(seed);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<int> kept;
    for (int j = 0; j < topo.joint_count(); ++j) {
      const double u = rng.uniform();
      if (j == topo.root()) {
        kept.push_back(j);
        continue;
      }
      const double p = topo.is_major(j) ? p_major : p_other;
      if (u >= p) kept.push_back(j);
    }
    if (kept.size() >= 2) return make_joint_subset(topo, std::move(kept));
  }
  throw DataError("joint subsampling kept fewer than 2 joints after " + std::to_string(max_attempts) + " draws");
}

struct SubsampledMotion {
  MotionSequence motion;
  SkeletonTemplate skeleton;
  JointSubset subset;
};

inline SubsampledMotion subsample_joints(const MotionSequence& seq, const SkeletonTemplate& t, std::uint64_t seed,
                                         double p_major, double p_other) {
  if (!seq.topology().same_structure(t.topology))
    throw DataError("subsample_joints: sequence and template topologies differ");
  JointSubset subset = draw_joint_subset(seq.topology(), seed, p_major, p_other);
  return {apply_subset(seq, subset), apply_subset(t, subset), std::move(subset)};
}

}  // namespace humot
