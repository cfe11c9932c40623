#pragma once

// Synthetic overfit fixture and the cached training run shared by the
// trained-model acceptance criteria.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "humot/mocap/builtin.hpp"
#include "humot/mocap/chunks.hpp"
#include "humot/mocap/synthetic.hpp"
#include "humot/tasks/metrics.hpp"
#include "humot/training/checkpoint.hpp"
#include "humot/training/trainer.hpp"

namespace humot::acceptance {

struct FixtureItem {
  MotionSequence motion;      // one normalized 30-frame chunk
  SkeletonTemplate skeleton;  // its character's template
  SkeletonTemplate generic;   // neutral pose of the topology
};

inline constexpr int kFixtureSize = 20;
inline constexpr double kOverfitTargetCm = 2.0;
inline constexpr double kEarlyStopCm = 1.5;
inline constexpr std::int64_t kOverfitMaxSteps = 20000;
inline constexpr std::int64_t kEvalEvery = 200;
inline constexpr std::int64_t kSaveEvery = 500;

/// Twenty one-second clips alternating between the 17- and 23-joint
/// skeletons over every motion kind, with body scales spread over
/// [0.75, 1.6].
inline std::vector<FixtureItem> overfit_fixture() {
  const MotionKind kinds[] = {MotionKind::kIdleSway, MotionKind::kWalkCycle, MotionKind::kArmWave, MotionKind::kSquat,
                              MotionKind::kComposite};
  std::vector<FixtureItem> items;
  for (int i = 0; i < kFixtureSize; ++i) {
    const SkeletonTemplate generic = i % 2 ? builtin_skeleton23() : builtin_skeleton17();
    SyntheticRequest req;
    req.kind = kinds[i % 5];
    req.morphology.scale = 0.75 + 0.85 * ((i * 7) % kFixtureSize) / (kFixtureSize - 1.0);
    req.morphology.bone_jitter = 0.08;
    req.duration = 1.0;
    req.framerate = kModelFramerate;
    req.seed = 1000 + static_cast<std::uint64_t>(i);
    const MotionSequence seq = generate_synthetic(generic, req);
    const auto chunks = extract_chunks(seq);
    items.push_back({chunks.at(0).positions, template_from_sequence(seq, generic), generic});
  }
  return items;
}

inline TrainConfig overfit_train_config() {
  TrainConfig c;
  c.batch_size = 8;
  c.iterations = kOverfitMaxSteps;
  c.seed = 20240917;
  c.lr_min = 5e-5;
  c.lr_max = 5e-4;
  return c;
}

inline std::vector<TrainingItem> to_training_items(const std::vector<FixtureItem>& fixture) {
  std::vector<TrainingItem> out;
  for (const auto& f : fixture) out.push_back({f.motion, f.skeleton});
  return out;
}

/// Mean encode-decode MPJPE (cm) over the fixture.
template <typename T>
double fixture_mpjpe(const MotionAutoencoder<T>& model, const std::vector<FixtureItem>& fixture) {
  double sum = 0.0;
  for (const auto& f : fixture) sum += mpjpe(reconstruct(f.motion, f.skeleton, model), f.motion);
  return sum / static_cast<double>(fixture.size());
}

struct OverfitResult {
  std::int64_t steps = 0;
  double mpjpe_cm = 0.0;
  double seconds = 0.0;  // cumulative training time across resumptions
};

/// Loads the cached overfit model from `dir`, or trains it (resuming from a
/// partial checkpoint when present). Progress is written to `log`.
inline OverfitResult train_or_load_overfit(MotionAutoencoder<float>& model, const std::filesystem::path& dir,
                                           std::ostream& log) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path final_ckpt = dir / "overfit.hmcp";
  const fs::path partial_ckpt = dir / "overfit_partial.hmcp";
  const fs::path summary = dir / "overfit_summary.json";
  const auto fixture = overfit_fixture();

  if (fs::exists(final_ckpt) && fs::exists(summary)) {
    load_checkpoint(final_ckpt, model);
    const auto j = nlohmann::json::parse(std::ifstream(summary));
    return {j.at("steps").get<std::int64_t>(), fixture_mpjpe(model, fixture), j.at("seconds").get<double>()};
  }

  Trainer<float> trainer(model, to_training_items(fixture), overfit_train_config());
  double seconds = 0.0;
  const bool resume = fs::exists(partial_ckpt);
  if (resume) {
    const auto h = load_checkpoint(partial_ckpt, model, &trainer.optimizer());
    trainer.set_step(h.step);
    const fs::path progress = dir / "overfit_progress.json";
    if (fs::exists(progress)) seconds = nlohmann::json::parse(std::ifstream(progress)).at("seconds").get<double>();
    log << "resuming overfit run at step " << h.step << "\n";
  }
  std::ofstream metrics(dir / "overfit_metrics.csv", resume ? std::ios::app : std::ios::trunc);
  if (!resume) write_metrics_header(metrics);

  double last = fixture_mpjpe(model, fixture);
  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return seconds + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  trainer.run([&](const StepMetrics& m) {
    write_metrics_row(metrics, m);
    const std::int64_t done = m.step + 1;
    if (done % kSaveEvery == 0) {
      metrics.flush();
      save_checkpoint(partial_ckpt, model, trainer.config(), done, &trainer.optimizer());
      std::ofstream(dir / "overfit_progress.json") << nlohmann::json{{"steps", done}, {"seconds", elapsed()}}.dump();
    }
    if (done % kEvalEvery == 0) {
      last = fixture_mpjpe(model, fixture);
      log << "step " << done << " l_rec " << m.l_rec << " l_blc " << m.l_blc << " mpjpe " << last << " cm, "
          << elapsed() << " s" << std::endl;
      if (last < kEarlyStopCm) return false;
    }
    return true;
  });
  const std::int64_t steps = trainer.current_step();
  last = fixture_mpjpe(model, fixture);
  save_checkpoint(final_ckpt, model, trainer.config(), steps, &trainer.optimizer());
  std::ofstream(summary) << nlohmann::json{{"steps", steps}, {"seconds", elapsed()}, {"mpjpe_cm", last}}.dump(2);
  return {steps, last, elapsed()};
}

}  // namespace humot::acceptance
