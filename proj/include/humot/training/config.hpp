#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>

#include "humot/error.hpp"

namespace humot {

struct TrainConfig {
  double lambda_blc = 0.5;
  int batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double lr_min = 1e-5;
  double lr_max = 1e-4;
  /// Length of one triangle cycle in optimizer steps. 0 means ten passes
  /// over the training set, resolved once the dataset size is known.
  std::int64_t steps_per_period = 0;
  std::int64_t iterations = 10000;
  std::uint64_t seed = 0;
  double p_major = 0.1;
  double p_other = 0.5;
  bool finetune = false;
  double finetune_lr = 5e-5;
  std::int64_t checkpoint_every = 1000;

  void validate() const {
    if (!(lr_min > 0.0 && lr_max >= lr_min)) throw UsageError("train config: need 0 < lr_min <= lr_max");
    if (!(finetune_lr > 0.0)) throw UsageError("train config: finetune_lr must be positive");
    if (steps_per_period < 0) throw UsageError("train config: steps_per_period must be positive (or 0 for auto)");
    if (batch_size < 1) throw UsageError("train config: batch_size must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw UsageError("train config: betas must lie in [0, 1)");
    if (!(adam_eps > 0.0)) throw UsageError("train config: adam_eps must be positive");
    if (!(lambda_blc >= 0.0)) throw UsageError("train config: lambda_blc must be non-negative");
    if (!(p_major >= 0.0 && p_major <= 1.0 && p_other >= 0.0 && p_other <= 1.0))
      throw UsageError("train config: drop probabilities must lie in [0, 1]");
    if (iterations < 0) throw UsageError("train config: iterations must be non-negative");
  }

  /// Concrete period for a dataset of `items` chunks.
  std::int64_t resolved_period(std::int64_t items) const {
    if (steps_per_period > 0) return steps_per_period;
    const std::int64_t per_epoch = items <= 0 ? 1 : (items + batch_size - 1) / batch_size;
    return 10 * per_epoch;
  }

  bool operator==(const TrainConfig&) const = default;
};

/// Triangular cyclic schedule starting at the lower bound; constant in
/// fine-tuning mode.
inline double lr_at(std::int64_t step, const TrainConfig& c, std::int64_t period) {
  if (c.finetune) return c.finetune_lr;
  if (period <= 0) throw UsageError("lr schedule period must be positive");
  const double phase = static_cast<double>(step % period) / static_cast<double>(period);
  const double tri = 1.0 - std::abs(2.0 * phase - 1.0);
  return c.lr_min + (c.lr_max - c.lr_min) * tri;
}

inline double lr_at(std::int64_t step, const TrainConfig& c) {
  return lr_at(step, c, c.steps_per_period > 0 ? c.steps_per_period : 1);
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"lambda_blc", c.lambda_blc},
                     {"batch_size", c.batch_size},
                     {"beta1", c.beta1},
                     {"beta2", c.beta2},
                     {"adam_eps", c.adam_eps},
                     {"lr_min", c.lr_min},
                     {"lr_max", c.lr_max},
                     {"steps_per_period", c.steps_per_period},
                     {"iterations", c.iterations},
                     {"seed", c.seed},
                     {"p_major", c.p_major},
                     {"p_other", c.p_other},
                     {"finetune", c.finetune},
                     {"finetune_lr", c.finetune_lr},
                     {"checkpoint_every", c.checkpoint_every}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("lambda_blc", c.lambda_blc);
  get("batch_size", c.batch_size);
  get("beta1", c.beta1);
  get("beta2", c.beta2);
  get("adam_eps", c.adam_eps);
  get("lr_min", c.lr_min);
  get("lr_max", c.lr_max);
  get("steps_per_period", c.steps_per_period);
  get("iterations", c.iterations);
  get("seed", c.seed);
  get("p_major", c.p_major);
  get("p_other", c.p_other);
  get("finetune", c.finetune);
  get("finetune_lr", c.finetune_lr);
  get("checkpoint_every", c.checkpoint_every);
}

}  // namespace humot
