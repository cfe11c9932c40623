#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "humot/model/autoencoder.hpp"
#include "humot/training/adam.hpp"
#include "humot/training/config.hpp"
#include "humot/training/losses.hpp"

namespace humot {

/// A chunk paired with the template of the character it was recorded on.
struct TrainingItem {
  MotionSequence motion;
  SkeletonTemplate skeleton;
};

struct StepMetrics {
  std::int64_t step = 0;
  double lr = 0.0;
  double l_rec = 0.0;
  double l_blc = 0.0;
  double total = 0.0;
};

inline void write_metrics_header(std::ostream& os) { os << "step,lr,l_rec,l_blc,total\n"; }

inline void write_metrics_row(std::ostream& os, const StepMetrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g,%.9g\n", static_cast<long long>(m.step), m.lr, m.l_rec, m.l_blc,
                m.total);
  os << buf;
}

/// Dataset indices for `step`: consecutive slices of per-epoch
/// permutations, so the stream depends only on (seed, step).
inline std::vector<int> batch_indices(std::uint64_t seed, std::int64_t step, int batch_size, int items) {
  if (items <= 0) throw DataError("training set is empty");
  std::vector<int> out;
  out.reserve(batch_size);
  std::int64_t cached_epoch = -1;
  std::vector<int> perm;
  for (int i = 0; i < batch_size; ++i) {
    const std::int64_t pos = step * batch_size + i;
    const std::int64_t epoch = pos / items;
    if (epoch != cached_epoch) {
      perm.resize(items);
      std::iota(perm.begin(), perm.end(), 0);
      Rng rng(derive_seed(seed, {0xba7c, static_cast<std::uint64_t>(epoch)}));
      for (int k = items - 1; k > 0; --k) std::swap(perm[k], perm[rng.below(static_cast<std::uint64_t>(k) + 1)]);
      cached_epoch = epoch;
    }
    out.push_back(perm[pos % items]);
  }
  return out;
}

/// Seeds of the two joint-subsampling draws for one batch item.
inline std::pair<std::uint64_t, std::uint64_t> subsampling_seeds(std::uint64_t seed, std::int64_t step, int slot) {
  const auto s = static_cast<std::uint64_t>(step);
  const auto k = static_cast<std::uint64_t>(slot);
  return {derive_seed(seed, {0x5a11, s, k, 1}), derive_seed(seed, {0x5a11, s, k, 2})};
}

/// Loss of one item under the two subsampled views; gradients accumulate
/// into the model parameters scaled by `weight`.
template <typename T>
std::pair<double, double> accumulate_item(MotionAutoencoder<T>& model, const TrainingItem& item, std::uint64_t seed_in,
                                          std::uint64_t seed_out, const TrainConfig& c, double weight) {
  const SubsampledMotion in = subsample_joints(item.motion, item.skeleton, seed_in, c.p_major, c.p_other);
  const SubsampledMotion out = subsample_joints(item.motion, item.skeleton, seed_out, c.p_major, c.p_other);
  const int F = item.motion.frame_count();

  nn::Tape<T> tape;
  nn::ForwardContext<T> ctx(model.parameters(), tape);
  auto z = model.encode(ctx, motion_tokens<T>(in.motion), template_matrix<T>(in.skeleton), F);
  auto pred = model.decode(ctx, z, template_matrix<T>(out.skeleton));
  const nn::Matrix<T> target = motion_tokens<T>(out.motion);
  auto rec = nn::reconstruction_loss(pred, target);
  auto blc = nn::bone_consistency_loss(pred, target, out.skeleton.topology.parents(), F);
  const double l_rec = static_cast<double>(rec.value()(0, 0));
  const double l_blc = static_cast<double>(blc.value()(0, 0));
  if (!std::isfinite(l_rec) || !std::isfinite(l_blc))
    throw NumericError("non-finite loss (l_rec=" + std::to_string(l_rec) + ", l_blc=" + std::to_string(l_blc) + ")");
  auto total = nn::add(rec, nn::scale(blc, static_cast<T>(c.lambda_blc)));
  tape.backward(total, static_cast<T>(weight));
  return {l_rec, l_blc};
}

/// One optimizer update over a batch. Items are processed one at a time and
/// their gradients averaged, which equals batching items of equal joint
/// count. Parameters are left untouched when the loss or any gradient is
/// non-finite.
template <typename T>
StepMetrics training_step(MotionAutoencoder<T>& model, AdamState<T>& opt, const std::vector<const TrainingItem*>& batch,
                          std::int64_t step, const TrainConfig& c, double lr) {
  if (batch.empty()) throw DataError("training_step: empty batch");
  auto& params = model.parameters();
  params.zero_grad();
  StepMetrics m;
  m.step = step;
  m.lr = lr;
  const double w = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto [s1, s2] = subsampling_seeds(c.seed, step, static_cast<int>(i));
    const auto [rec, blc] = accumulate_item(model, *batch[i], s1, s2, c, w);
    m.l_rec += rec * w;
    m.l_blc += blc * w;
  }
  m.total = m.l_rec + c.lambda_blc * m.l_blc;
  for (int i = 0; i < params.size(); ++i)
    if (!params[i].grad.allFinite()) throw NumericError("non-finite gradient in " + params.name(i));
  adam_update(params, opt, lr, c);
  return m;
}

/// Training loop state: model, optimizer moments and step counter.
template <typename T>
class Trainer {
 public:
  Trainer(MotionAutoencoder<T>& model, std::vector<TrainingItem> data, TrainConfig config)
      : model_(model), data_(std::move(data)), config_(std::move(config)) {
    config_.validate();
    if (data_.empty()) throw DataError("trainer: no training items");
    period_ = config_.resolved_period(static_cast<std::int64_t>(data_.size()));
    opt_ = AdamState<T>::zeros(model_.parameters());
  }

  StepMetrics step() {
    const auto idx = batch_indices(config_.seed, step_, config_.batch_size, static_cast<int>(data_.size()));
    std::vector<const TrainingItem*> batch;
    for (int i : idx) batch.push_back(&data_[i]);
    StepMetrics m = training_step(model_, opt_, batch, step_, config_, lr_at(step_, config_, period_));
    ++step_;
    return m;
  }

  /// Runs until `iterations` total steps, or until `on_step` returns false.
  void run(const std::function<bool(const StepMetrics&)>& on_step) {
    while (step_ < config_.iterations) {
      const StepMetrics m = step();
      if (on_step && !on_step(m)) break;
    }
  }

  std::int64_t current_step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }
  std::int64_t period() const { return period_; }
  AdamState<T>& optimizer() { return opt_; }
  const AdamState<T>& optimizer() const { return opt_; }
  const TrainConfig& config() const { return config_; }
  const std::vector<TrainingItem>& data() const { return data_; }
  MotionAutoencoder<T>& model() { return model_; }

 private:
  MotionAutoencoder<T>& model_;
  std::vector<TrainingItem> data_;
  TrainConfig config_;
  std::int64_t period_ = 1;
  AdamState<T> opt_;
  std::int64_t step_ = 0;
};

}  // namespace humot
