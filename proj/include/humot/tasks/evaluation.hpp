#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "humot/io/binary.hpp"
#include "humot/mocap/dataset.hpp"
#include "humot/model/autoencoder.hpp"
#include "humot/tasks/metrics.hpp"

namespace humot {

/// One motion to evaluate with the template of its character.
struct EvalItem {
  std::string id;
  MotionSequence motion;
  SkeletonTemplate skeleton;
  bool unseen = false;  // topology absent from training
};

struct EvalRow {
  std::string item;
  std::string topology;
  bool unseen = false;
  double sweep = 0.0;          // noise sigma (cm) or joint proportion; 0 without a sweep
  double input_mpjpe = 0.0;    // corruption of the model input (cm)
  double mpjpe = 0.0;          // output vs. clean reference (cm)
  double normalized = 0.0;     // mpjpe / skeleton height
  double kept_mpjpe = std::numeric_limits<double>::quiet_NaN();     // joints seen by the encoder
  double heldout_mpjpe = std::numeric_limits<double>::quiet_NaN();  // joints hidden from the encoder
};

struct Aggregate {
  std::string topology;  // "all" for the pooled row
  double sweep = 0.0;
  int count = 0;
  double input_mean = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double normalized_mean = 0.0;
  double kept_mean = std::numeric_limits<double>::quiet_NaN();
  double heldout_mean = std::numeric_limits<double>::quiet_NaN();
};

struct EvalReport {
  std::string protocol;    // representation | denoising | upsampling
  std::string sweep_axis;  // "", "sigma_cm" or "proportion"
  std::string fingerprint;
  std::vector<EvalRow> rows;

  /// Per (sweep, topology) and pooled per sweep, recomputed from rows.
  std::vector<Aggregate> aggregates() const {
    std::map<std::pair<double, std::string>, std::vector<const EvalRow*>> groups;
    for (const auto& r : rows) {
      groups[{r.sweep, r.topology}].push_back(&r);
      groups[{r.sweep, std::string("all")}].push_back(&r);
    }
    std::vector<Aggregate> out;
    for (const auto& [key, members] : groups) {
      Aggregate a;
      a.sweep = key.first;
      a.topology = key.second;
      a.count = static_cast<int>(members.size());
      double kept = 0.0, held = 0.0;
      int n_kept = 0, n_held = 0;
      for (const EvalRow* r : members) {
        a.mean += r->mpjpe;
        a.input_mean += r->input_mpjpe;
        a.normalized_mean += r->normalized;
        if (!std::isnan(r->kept_mpjpe)) kept += r->kept_mpjpe, ++n_kept;
        if (!std::isnan(r->heldout_mpjpe)) held += r->heldout_mpjpe, ++n_held;
      }
      a.mean /= a.count;
      a.input_mean /= a.count;
      a.normalized_mean /= a.count;
      if (n_kept) a.kept_mean = kept / n_kept;
      if (n_held) a.heldout_mean = held / n_held;
      double ss = 0.0;
      for (const EvalRow* r : members) ss += (r->mpjpe - a.mean) * (r->mpjpe - a.mean);
      a.stddev = std::sqrt(ss / a.count);
      out.push_back(a);
    }
    return out;
  }

  /// Pooled aggregate for one sweep value.
  Aggregate pooled(double sweep) const {
    for (const auto& a : aggregates())
      if (a.topology == "all" && a.sweep == sweep) return a;
    throw DataError("report has no rows for sweep value " + std::to_string(sweep));
  }
};

/// CRC-32 over the model configuration and parameter bytes, as hex.
template <typename T>
std::string model_fingerprint(const MotionAutoencoder<T>& model) {
  io::Writer w;
  w.put_string(nlohmann::json(model.config()).dump());
  const auto& params = model.parameters();
  for (int i = 0; i < params.size(); ++i) {
    w.put_string(params.name(i));
    for (Eigen::Index k = 0; k < params[i].value.size(); ++k) w.put(static_cast<float>(params[i].value.data()[k]));
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", io::crc32(w.bytes()));
  return buf;
}

/// Evaluation items from a dataset split. Chunks of topologies listed in
/// `unseen_topologies` are flagged.
inline std::vector<EvalItem> eval_items(const Dataset& ds, Split split,
                                        const std::vector<std::string>& unseen_topologies = {}) {
  std::vector<EvalItem> out;
  int k = 0;
  for (const auto& c : ds.chunks) {
    ++k;
    if (c.split != split) continue;
    const SkeletonTemplate& t = ds.template_for(c);
    const bool unseen = std::find(unseen_topologies.begin(), unseen_topologies.end(), t.topology.id()) !=
                        unseen_topologies.end();
    out.push_back({"chunk" + std::to_string(k - 1), c.positions, t, unseen});
  }
  return out;
}

inline bool is_finger_joint(const std::string& name) {
  std::string k;
  for (char ch : name) k += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  for (const char* f : {"finger", "thumb", "index", "middle", "ring", "pinky", "pinkie"})
    if (k.find(f) != std::string::npos) return true;
  return false;
}

/// Drops finger joints from an evaluation item (no-op without fingers).
inline EvalItem without_fingers(const EvalItem& item) {
  std::vector<int> kept;
  const auto& names = item.skeleton.topology.joint_names();
  for (int j = 0; j < static_cast<int>(names.size()); ++j)
    if (!is_finger_joint(names[j])) kept.push_back(j);
  if (static_cast<int>(kept.size()) == item.skeleton.joint_count()) return item;
  const JointSubset s = make_joint_subset(item.skeleton.topology, kept);
  return {item.id, apply_subset(item.motion, s), apply_subset(item.skeleton, s), item.unseen};
}

namespace detail {

inline EvalRow make_row(const EvalItem& item, double sweep, double input_err, const MotionSequence& out) {
  EvalRow r;
  r.item = item.id;
  r.topology = item.skeleton.topology.id();
  r.unseen = item.unseen;
  r.sweep = sweep;
  r.input_mpjpe = input_err;
  r.mpjpe = mpjpe(out, item.motion);
  r.normalized = r.mpjpe / (kCentimetersPerMeter * skeleton_height(item.skeleton));
  return r;
}

}  // namespace detail

/// Encode-decode accuracy per item.
template <typename T>
EvalReport eval_representation(const std::vector<EvalItem>& items, const MotionAutoencoder<T>& model) {
  EvalReport rep{"representation", "", model_fingerprint(model), {}};
  for (const auto& raw : items) {
    const EvalItem item = without_fingers(raw);
    rep.rows.push_back(detail::make_row(item, 0.0, 0.0, reconstruct(item.motion, item.skeleton, model)));
  }
  return rep;
}

/// Adds i.i.d. Gaussian noise of standard deviation `sigma` (meters) to
/// every coordinate.
inline MotionSequence add_gaussian_noise(const MotionSequence& seq, double sigma, std::uint64_t seed) {
  MotionSequence out = seq;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (double& v : out.data()) v += rng.normal(0.0, sigma);
  return out;
}

/// Default noise levels in centimeters.
inline std::vector<double> default_sigmas_cm() { return {0, 1, 2, 3, 5, 7, 10}; }

/// For each sigma (cm): corrupt, encode-decode, compare with the clean
/// motion. Rows record the corruption (input) and residual (output) MPJPE.
template <typename T>
EvalReport eval_denoising(const std::vector<EvalItem>& items, const MotionAutoencoder<T>& model,
                          const std::vector<double>& sigmas_cm, std::uint64_t seed) {
  EvalReport rep{"denoising", "sigma_cm", model_fingerprint(model), {}};
  for (std::size_t s = 0; s < sigmas_cm.size(); ++s) {
    const double sigma = sigmas_cm[s] / kCentimetersPerMeter;
    if (!(sigma >= 0.0)) throw UsageError("noise sigma must be non-negative");
    for (std::size_t i = 0; i < items.size(); ++i) {
      const EvalItem item = without_fingers(items[i]);
      const MotionSequence noisy = add_gaussian_noise(item.motion, sigma, derive_seed(seed, {0xd0, s, i}));
      rep.rows.push_back(
          detail::make_row(item, sigmas_cm[s], mpjpe(noisy, item.motion), reconstruct(noisy, item.skeleton, model)));
    }
  }
  return rep;
}

inline std::vector<double> default_proportions() { return {0.25, 0.4, 0.5, 0.7, 0.85, 1.0}; }

/// Number of joints kept at proportion p: max(2, round(p * J)), at most J.
inline int kept_joint_count(double p, int joints) {
  return std::clamp(static_cast<int>(std::lround(p * joints)), 2, joints);
}

/// Random subset of `count` joints that always contains the pelvis.
inline JointSubset random_subset_with_pelvis(const SkeletonTopology& topo, int count, std::uint64_t seed) {
  std::vector<int> others;
  for (int j = 0; j < topo.joint_count(); ++j)
    if (j != topo.root()) others.push_back(j);
  Rng rng(seed);
  for (int k = static_cast<int>(others.size()) - 1; k > 0; --k)
    std::swap(others[k], others[rng.below(static_cast<std::uint64_t>(k) + 1)]);
  std::vector<int> kept(others.begin(), others.begin() + (count - 1));
  kept.push_back(topo.root());
  return make_joint_subset(topo, kept);
}

/// For each proportion: encode a random joint subset with the subsampled
/// template, decode with the full template, compare on all joints, on the
/// kept joints and on the held-out joints.
template <typename T>
EvalReport eval_upsampling(const std::vector<EvalItem>& items, const MotionAutoencoder<T>& model,
                           const std::vector<double>& proportions, std::uint64_t seed) {
  EvalReport rep{"upsampling", "proportion", model_fingerprint(model), {}};
  for (std::size_t s = 0; s < proportions.size(); ++s) {
    const double p = proportions[s];
    if (!(p > 0.0 && p <= 1.0)) throw UsageError("joint proportions must lie in (0, 1]");
    for (std::size_t i = 0; i < items.size(); ++i) {
      const EvalItem item = without_fingers(items[i]);
      const int J = item.skeleton.joint_count();
      const JointSubset subset =
          random_subset_with_pelvis(item.skeleton.topology, kept_joint_count(p, J), derive_seed(seed, {0xa5, s, i}));
      const MotionSequence in = apply_subset(item.motion, subset);
      const SkeletonTemplate in_t = apply_subset(item.skeleton, subset);
      const MotionSequence out = decode(encode(in, in_t, model), item.skeleton, model, item.motion.framerate());
      EvalRow r = detail::make_row(item, p, 0.0, out);
      std::vector<int> held;
      for (int j = 0; j < J; ++j)
        if (!std::binary_search(subset.kept.begin(), subset.kept.end(), j)) held.push_back(j);
      r.kept_mpjpe = mpjpe(out, item.motion, subset.kept);
      if (!held.empty()) r.heldout_mpjpe = mpjpe(out, item.motion, held);
      rep.rows.push_back(r);
    }
  }
  return rep;
}

}  // namespace humot
