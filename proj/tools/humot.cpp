// humot: data preparation, training and motion tasks from the command line.
//
//   humot synth    --topology body23 --kind walk-cycle --out clips/
//   humot prepare  clips/*.bvh --out data/ --holdout-topology body17
//   humot train    --dataset data/ --iterations 1000 --out run/
//   humot retarget --checkpoint run/last.hmcp --input a.hmmo --target body17 --out res/
//   humot eval     --checkpoint run/last.hmcp --dataset data/ --protocol all --out eval/
//
// Exit codes: 0 ok, 2 usage, 3 data, 4 model, 5 numeric failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "humot/humot.hpp"

namespace fs = std::filesystem;
using namespace humot;
using Model = MotionAutoencoder<float>;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kModel = 4, kNumeric = 5 };

struct GlobalFlags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  bool resume = false;
  std::string device;
};

/// Options given explicitly on the command line, as a JSON patch.
nlohmann::json explicit_flags(const CLI::App& app, const GlobalFlags& g) {
  nlohmann::json j = nlohmann::json::object();
  if (app.count("--seed")) j["seed"] = g.seed;
  if (app.count("--out")) j["out"] = g.out;
  if (app.count("--resume")) j["resume"] = g.resume;
  if (app.count("--device")) j["device"] = g.device;
  return j;
}

RunConfig resolve(const CLI::App& app, const GlobalFlags& g, nlohmann::json flags) {
  flags.merge_patch(explicit_flags(app, g));
  const nlohmann::json file = g.config.empty() ? nlohmann::json() : load_config_file(g.config);
  return resolve_run_config(humot_environment(), file, flags);
}

void log(const std::string& msg) { std::cerr << "humot: " << msg << "\n"; }

// ---------------------------------------------------------------------------
// Inputs

SkeletonTemplate template_arg(const std::string& spec) {
  for (const auto& id : builtin_skeleton_ids())
    if (spec == id) return builtin_skeleton(id);
  const fs::path p(spec);
  if (p.extension() == ".tpl") return load_template(p).skeleton;
  if (p.extension() == ".hmmo") return load_motion(p).skeleton;
  throw UsageError("template '" + spec + "': expected a built-in id (body17, body23), a .tpl or a .hmmo file");
}

/// Motion at the model framerate together with its template.
MotionFile motion_arg(const fs::path& path, const RunConfig& cfg) {
  if (path.extension() == ".hmmo") {
    MotionFile f = load_motion(path);
    if (f.motion.framerate() != kModelFramerate) f.motion = resample(f.motion, kModelFramerate);
    return f;
  }
  PrepareOptions opt = cfg.prepare;
  opt.target_fps = kModelFramerate;
  PreparedInput in = load_input(path, opt);
  SkeletonTemplate t = template_from_sequence(in.motion, in.generic);
  return {std::move(in.motion), std::move(t)};
}

/// Model for a checkpoint. Without an explicit model configuration the
/// stored one is used; an explicit one must match it.
std::unique_ptr<Model> model_arg(const std::string& checkpoint, const RunConfig& cfg) {
  if (checkpoint.empty()) throw UsageError("--checkpoint is required");
  const CheckpointHeader h = read_checkpoint_header(checkpoint);
  const ModelConfig mc = cfg.model == ModelConfig{} ? h.model : cfg.model;
  auto model = std::make_unique<Model>(mc, cfg.seed);
  load_checkpoint(checkpoint, *model);
  return model;
}

std::string stem_of(const fs::path& p) { return p.stem().string(); }

std::vector<fs::path> expand_inputs(const std::vector<std::string>& args) {
  std::vector<fs::path> out;
  for (const auto& a : args) {
    if (fs::is_directory(a)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(a)) {
        const auto ext = e.path().extension();
        if (ext == ".bvh" || ext == ".hmmo") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.emplace_back(a);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

struct SynthArgs {
  std::string topology = "body23";
  std::string kind = "walk-cycle";
  double scale = 1.0;
  double jitter = 0.0;
  double duration = 2.0;
  double fps = 60.0;
  int count = 1;
  std::string format = "bvh";
};

int cmd_synth(const RunConfig& cfg, const SynthArgs& a) {
  const fs::path out = cfg.out;
  fs::create_directories(out);
  write_run_config(cfg, out, "synth");
  const SkeletonTemplate& generic = builtin_skeleton(a.topology);
  const std::vector<std::string> kinds =
      a.kind == "all" ? std::vector<std::string>{"idle-sway", "walk-cycle", "arm-wave", "squat", "composite"}
                      : std::vector<std::string>{a.kind};
  for (int i = 0; i < a.count; ++i) {
    SyntheticRequest req;
    req.kind = parse_motion_kind(kinds[i % kinds.size()]);
    req.morphology = {a.scale, a.jitter};
    req.duration = a.duration;
    req.framerate = a.fps;
    req.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(i)});
    char name[128];
    std::snprintf(name, sizeof name, "%s_%s_%03d", a.topology.c_str(), to_string(req.kind), i);
    if (a.format == "bvh") {
      const fs::path path = out / (std::string(name) + ".bvh");
      std::ofstream os(path);
      if (!os) throw FileError(FileErrorCode::kIo, path.string(), "cannot open for writing");
      write_bvh(os, generate_synthetic_clip(generic, req));
      std::cout << path.string() << "\n";
    } else if (a.format == "hmmo") {
      const MotionSequence seq = generate_synthetic(generic, req);
      const fs::path path = out / (std::string(name) + ".hmmo");
      save_motion(path, seq, template_from_sequence(seq, generic));
      std::cout << path.string() << "\n";
    } else {
      throw UsageError("--format must be bvh or hmmo");
    }
  }
  return kOk;
}

int cmd_prepare(const RunConfig& cfg, const std::vector<std::string>& args) {
  const auto inputs = expand_inputs(args);
  if (inputs.empty()) throw UsageError("prepare: no input files");
  std::vector<PreparedInput> loaded;
  int failed = 0;
  for (const auto& p : inputs) {
    try {
      loaded.push_back(load_input(p, cfg.prepare));
    } catch (const DataError& e) {
      std::cerr << p.string() << ": " << e.what() << "\n";
      ++failed;
    }
  }
  if (failed) {
    log(std::to_string(failed) + " of " + std::to_string(inputs.size()) + " inputs failed; nothing written");
    return kData;
  }
  const Dataset ds = build_dataset(loaded, cfg.prepare, cfg.seed);
  write_dataset(ds, cfg.out);
  write_run_config(cfg, cfg.out, "prepare");
  std::map<std::string, std::pair<int, int>> per_topology;
  for (const auto& c : ds.chunks) {
    auto& counts = per_topology[ds.template_for(c).topology.id()];
    (c.split == Split::kTrain ? counts.first : counts.second)++;
  }
  std::cout << "topology,train,validation\n";
  for (const auto& [id, n] : per_topology) std::cout << id << ',' << n.first << ',' << n.second << "\n";
  return kOk;
}

std::vector<TrainingItem> training_items(const Dataset& ds) {
  std::vector<TrainingItem> items;
  for (const Chunk* c : ds.split(Split::kTrain)) items.push_back({c->positions, ds.template_for(*c)});
  if (items.empty()) throw DataError("dataset has no training chunks");
  return items;
}

void rewrite_metrics_until(const fs::path& path, std::int64_t step) {
  std::ifstream is(path);
  std::ostringstream kept;
  write_metrics_header(kept);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line))
    if (!line.empty() && std::stoll(line.substr(0, line.find(','))) < step) kept << line << "\n";
  is.close();
  std::ofstream(path, std::ios::trunc) << kept.str();
}

int cmd_train(RunConfig cfg, bool finetune) {
  if (cfg.dataset.empty()) throw UsageError("--dataset is required");
  cfg.train.finetune = finetune;
  const fs::path out = cfg.out;
  const fs::path last = out / "last.hmcp";
  fs::create_directories(out / "checkpoints");

  ModelConfig mc = cfg.model;
  std::optional<CheckpointHeader> resume_from;
  if (cfg.resume) {
    if (!fs::exists(last)) throw UsageError("--resume: no checkpoint at " + last.string());
    resume_from = read_checkpoint_header(last);
    if (mc == ModelConfig{}) mc = resume_from->model;
  } else if (finetune) {
    if (cfg.checkpoint.empty()) throw UsageError("finetune: --checkpoint is required");
    const CheckpointHeader h = read_checkpoint_header(cfg.checkpoint);
    if (mc == ModelConfig{}) mc = h.model;
  }
  cfg.model = mc;
  write_run_config(cfg, out, finetune ? "finetune" : "train");

  const Dataset ds = read_dataset(cfg.dataset);
  Model model(mc, cfg.seed);
  Trainer<float> trainer(model, training_items(ds), cfg.train);
  if (resume_from) {
    load_checkpoint(last, model, &trainer.optimizer());
    trainer.set_step(resume_from->step);
    log("resuming at step " + std::to_string(resume_from->step));
  } else if (finetune) {
    load_checkpoint(cfg.checkpoint, model);
  }

  const fs::path metrics_path = out / "metrics.csv";
  if (resume_from && fs::exists(metrics_path)) {
    rewrite_metrics_until(metrics_path, resume_from->step);
  } else {
    std::ofstream(metrics_path, std::ios::trunc) << "step,lr,l_rec,l_blc,total\n";
  }
  std::ofstream metrics(metrics_path, std::ios::app);

  auto save = [&](std::int64_t step) {
    char name[64];
    std::snprintf(name, sizeof name, "step_%08lld.hmcp", static_cast<long long>(step));
    save_checkpoint(out / "checkpoints" / name, model, cfg.train, step, &trainer.optimizer());
    save_checkpoint(last, model, cfg.train, step, &trainer.optimizer());
    metrics.flush();
  };
  if (!fs::exists(last) || !resume_from) save(trainer.current_step());

  try {
    trainer.run([&](const StepMetrics& m) {
      write_metrics_row(metrics, m);
      const std::int64_t done = m.step + 1;
      if (cfg.train.checkpoint_every > 0 && done % cfg.train.checkpoint_every == 0) save(done);
      return true;
    });
  } catch (const NumericError& e) {
    metrics.flush();
    log(std::string(e.what()) + " at step " + std::to_string(trainer.current_step()) +
        "; last good checkpoint kept at " + last.string());
    return kNumeric;
  }
  save(trainer.current_step());
  log("finished at step " + std::to_string(trainer.current_step()));
  return kOk;
}

int cmd_encode(const RunConfig& cfg, const std::string& input) {
  const auto model = model_arg(cfg.checkpoint, cfg);
  const MotionFile f = motion_arg(input, cfg);
  fs::create_directories(cfg.out);
  write_run_config(cfg, cfg.out, "encode");
  const fs::path path = fs::path(cfg.out) / (stem_of(input) + ".hmlz");
  save_latent(path, encode(f.motion, f.skeleton, *model), f.motion.framerate());
  std::cout << path.string() << "\n";
  return kOk;
}

int cmd_decode(const RunConfig& cfg, const std::string& latent, const std::string& tpl) {
  const auto model = model_arg(cfg.checkpoint, cfg);
  const LatentFile z = load_latent(latent);
  const SkeletonTemplate t = template_arg(tpl);
  fs::create_directories(cfg.out);
  write_run_config(cfg, cfg.out, "decode");
  const fs::path path = fs::path(cfg.out) / (stem_of(latent) + ".hmmo");
  save_motion(path, decode(z.code, t, *model, z.framerate), t);
  std::cout << path.string() << "\n";
  return kOk;
}

int cmd_retarget(const RunConfig& cfg, const std::string& input, const std::string& target, bool whole) {
  const auto model = model_arg(cfg.checkpoint, cfg);
  const MotionFile f = motion_arg(input, cfg);
  const SkeletonTemplate t = template_arg(target);
  RetargetOptions opt;
  opt.windowed = !whole;
  fs::create_directories(cfg.out);
  write_run_config(cfg, cfg.out, "retarget");
  const fs::path path = fs::path(cfg.out) / (stem_of(input) + "_retargeted.hmmo");
  save_motion(path, retarget(f.motion, f.skeleton, t, *model, opt), t);
  std::cout << path.string() << "\n";
  return kOk;
}

int cmd_denoise(const RunConfig& cfg, const std::string& input, double add_sigma_cm) {
  const auto model = model_arg(cfg.checkpoint, cfg);
  const MotionFile f = motion_arg(input, cfg);
  fs::create_directories(cfg.out);
  write_run_config(cfg, cfg.out, "denoise");
  const std::vector<EvalItem> items{{stem_of(input), f.motion, f.skeleton, false}};
  const MotionSequence noisy =
      add_gaussian_noise(f.motion, add_sigma_cm / kCentimetersPerMeter, derive_seed(cfg.seed, {0xd0, 0, 0}));
  const fs::path path = fs::path(cfg.out) / (stem_of(input) + "_denoised.hmmo");
  save_motion(path, reconstruct(noisy, f.skeleton, *model), f.skeleton);
  std::cout << path.string() << "\n";
  if (add_sigma_cm > 0.0)
    emit_report(eval_denoising(items, *model, {add_sigma_cm}, cfg.seed), cfg.out,
                {ReportFormat::kCsv, ReportFormat::kJson});
  return kOk;
}

int cmd_upsample(const RunConfig& cfg, const std::string& input, double proportion) {
  const auto model = model_arg(cfg.checkpoint, cfg);
  const MotionFile f = motion_arg(input, cfg);
  fs::create_directories(cfg.out);
  write_run_config(cfg, cfg.out, "upsample");
  const int keep = kept_joint_count(proportion, f.skeleton.joint_count());
  const JointSubset subset =
      random_subset_with_pelvis(f.skeleton.topology, keep, derive_seed(cfg.seed, {0xa5, 0, 0}));
  const MotionSequence out = decode(encode(apply_subset(f.motion, subset), apply_subset(f.skeleton, subset), *model),
                                    f.skeleton, *model, f.motion.framerate());
  const fs::path path = fs::path(cfg.out) / (stem_of(input) + "_upsampled.hmmo");
  save_motion(path, out, f.skeleton);
  std::cout << path.string() << "\n";
  const std::vector<EvalItem> items{{stem_of(input), f.motion, f.skeleton, false}};
  emit_report(eval_upsampling(items, *model, {proportion}, cfg.seed), cfg.out,
              {ReportFormat::kCsv, ReportFormat::kJson});
  return kOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& protocol) {
  if (cfg.dataset.empty()) throw UsageError("--dataset is required");
  const auto model = model_arg(cfg.checkpoint, cfg);
  const Dataset ds = read_dataset(cfg.dataset);
  Split split;
  if (cfg.eval.split == "train")
    split = Split::kTrain;
  else if (cfg.eval.split == "validation")
    split = Split::kValidation;
  else
    throw UsageError("--split must be train or validation");
  const auto items = eval_items(ds, split, cfg.eval.unseen_topologies);
  if (items.empty()) throw DataError("no chunks in the " + cfg.eval.split + " split");
  fs::create_directories(cfg.out);
  write_run_config(cfg, cfg.out, "eval");
  const std::vector<ReportFormat> all{ReportFormat::kCsv, ReportFormat::kSvg, ReportFormat::kJson};
  bool any = false;
  auto run = [&](const char* name, auto&& fn) {
    if (protocol != "all" && protocol != name) return;
    any = true;
    const EvalReport rep = fn();
    emit_report(rep, cfg.out, all);
    for (const auto& a : rep.aggregates())
      if (a.topology == "all")
        std::printf("%s sweep=%g mpjpe=%.4f cm (std %.4f, n=%d)\n", name, a.sweep, a.mean, a.stddev, a.count);
  };
  run("representation", [&] { return eval_representation(items, *model); });
  run("denoising", [&] { return eval_denoising(items, *model, cfg.eval.sigmas_cm, cfg.seed); });
  run("upsampling", [&] { return eval_upsampling(items, *model, cfg.eval.proportions, cfg.seed); });
  if (!any) throw UsageError("--protocol must be representation, denoising, upsampling or all");
  return kOk;
}

int cmd_report(const RunConfig& cfg, const std::vector<std::string>& inputs, const std::vector<std::string>& formats) {
  std::vector<ReportFormat> fmts;
  for (const auto& f : formats) {
    if (f == "csv")
      fmts.push_back(ReportFormat::kCsv);
    else if (f == "svg")
      fmts.push_back(ReportFormat::kSvg);
    else if (f == "json")
      fmts.push_back(ReportFormat::kJson);
    else
      throw UsageError("unknown report format '" + f + "'");
  }
  if (inputs.empty()) throw UsageError("report: no input report files");
  for (const auto& in : inputs) {
    std::ifstream is(in);
    if (!is) throw FileError(FileErrorCode::kIo, in, "cannot open");
    EvalReport rep;
    try {
      rep = nlohmann::json::parse(is).get<EvalReport>();
    } catch (const nlohmann::json::exception& e) {
      throw FileError(FileErrorCode::kMalformed, in, e.what());
    }
    for (const auto& p : emit_report(rep, cfg.out, fmts)) std::cout << p.string() << "\n";
  }
  write_run_config(cfg, cfg.out, "report");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topology-agnostic motion autoencoder: data preparation, training and motion tasks"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--out", g.out, "output directory");
  app.add_flag("--resume", g.resume, "continue from <out>/last.hmcp");
  app.add_option("--device", g.device, "compute device (cpu)");

  // Per-command options collected as JSON patches over RunConfig.
  nlohmann::json flags = nlohmann::json::object();
  std::function<int(const RunConfig&)> action;

  auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };

  SynthArgs synth;
  auto* s_synth = sub("synth", "generate synthetic motion clips");
  s_synth->add_option("--topology", synth.topology, "body17 or body23");
  s_synth->add_option("--kind", synth.kind, "idle-sway, walk-cycle, arm-wave, squat, composite or all");
  s_synth->add_option("--scale", synth.scale, "body scale");
  s_synth->add_option("--jitter", synth.jitter, "per-bone length jitter");
  s_synth->add_option("--duration", synth.duration, "seconds");
  s_synth->add_option("--fps", synth.fps, "frame rate");
  s_synth->add_option("--count", synth.count, "number of clips");
  s_synth->add_option("--format", synth.format, "bvh or hmmo");
  s_synth->callback([&] { action = [&](const RunConfig& c) { return cmd_synth(c, synth); }; });

  std::vector<std::string> prep_inputs;
  PrepareOptions prep;
  std::string axes;
  auto* s_prep = sub("prepare", "resample, convert and chunk recordings into a dataset");
  s_prep->add_option("inputs", prep_inputs, ".bvh / .hmmo files or directories")->required();
  auto* o_hold = s_prep->add_option("--holdout-topology", prep.holdout_topology, "topology kept out of training");
  auto* o_vf = s_prep->add_option("--validation-fraction", prep.validation_fraction, "share of validation chunks");
  auto* o_axes = s_prep->add_option("--axes", axes, "source axis per canonical axis, e.g. x,-z,y");
  auto* o_unit = s_prep->add_option("--unit", prep.unit, "meters per input unit");
  auto* o_fps = s_prep->add_option("--fps", prep.target_fps, "target frame rate");
  auto* o_topo = s_prep->add_option("--topology", prep.topology, "topology id for BVH inputs");
  s_prep->callback([&] {
    nlohmann::json p = nlohmann::json::object();
    if (o_hold->count()) p["holdout_topology"] = prep.holdout_topology;
    if (o_vf->count()) p["validation_fraction"] = prep.validation_fraction;
    if (o_axes->count()) p["axes"] = detail::split_on(axes, ',');
    if (o_unit->count()) p["unit"] = prep.unit;
    if (o_fps->count()) p["target_fps"] = prep.target_fps;
    if (o_topo->count()) p["topology"] = prep.topology;
    flags["prepare"] = p;
    action = [&](const RunConfig& c) { return cmd_prepare(c, prep_inputs); };
  });

  std::string dataset, checkpoint;
  std::int64_t iterations = 0, checkpoint_every = 0;
  int batch_size = 0;
  auto add_train = [&](CLI::App* s, bool finetune) {
    auto* o_ds = s->add_option("--dataset", dataset, "dataset directory");
    auto* o_it = s->add_option("--iterations", iterations, "total optimizer steps");
    auto* o_bs = s->add_option("--batch-size", batch_size, "mini-batch size");
    auto* o_ce = s->add_option("--checkpoint-every", checkpoint_every, "steps between checkpoints");
    CLI::Option* o_ck = finetune ? s->add_option("--checkpoint", checkpoint, "weights to start from") : nullptr;
    s->callback([&, o_ds, o_it, o_bs, o_ce, o_ck, finetune] {
      if (o_ds->count()) flags["dataset"] = dataset;
      if (o_ck && o_ck->count()) flags["checkpoint"] = checkpoint;
      if (o_it->count()) flags["train"]["iterations"] = iterations;
      if (o_bs->count()) flags["train"]["batch_size"] = batch_size;
      if (o_ce->count()) flags["train"]["checkpoint_every"] = checkpoint_every;
      action = [finetune](const RunConfig& c) { return cmd_train(c, finetune); };
    });
  };
  add_train(sub("train", "train a model"), false);
  add_train(sub("finetune", "fine-tune a trained model at a constant learning rate"), true);

  auto add_checkpoint = [&](CLI::App* s) {
    auto* o = s->add_option("--checkpoint", checkpoint, "model checkpoint");
    return o;
  };
  auto note_checkpoint = [&](CLI::Option* o) {
    if (o->count()) flags["checkpoint"] = checkpoint;
  };

  std::string input, target, latent;
  bool whole = false;
  double sigma = 0.0, proportion = 0.5;

  auto* s_enc = sub("encode", "encode a motion into a latent code");
  auto* o_enc_ck = add_checkpoint(s_enc);
  s_enc->add_option("--input", input, ".hmmo or .bvh motion")->required();
  s_enc->callback([&] {
    note_checkpoint(o_enc_ck);
    action = [&](const RunConfig& c) { return cmd_encode(c, input); };
  });

  auto* s_dec = sub("decode", "decode a latent code under a skeleton template");
  auto* o_dec_ck = add_checkpoint(s_dec);
  s_dec->add_option("--latent", latent, ".hmlz latent file")->required();
  s_dec->add_option("--template", target, "body17, body23, .tpl or .hmmo")->required();
  s_dec->callback([&] {
    note_checkpoint(o_dec_ck);
    action = [&](const RunConfig& c) { return cmd_decode(c, latent, target); };
  });

  auto* s_ret = sub("retarget", "transfer a motion to another skeleton");
  auto* o_ret_ck = add_checkpoint(s_ret);
  s_ret->add_option("--input", input, ".hmmo or .bvh motion")->required();
  s_ret->add_option("--target", target, "body17, body23, .tpl or .hmmo")->required();
  s_ret->add_flag("--whole", whole, "single pass without windowing");
  s_ret->callback([&] {
    note_checkpoint(o_ret_ck);
    action = [&](const RunConfig& c) { return cmd_retarget(c, input, target, whole); };
  });

  auto* s_den = sub("denoise", "encode-decode a noisy motion");
  auto* o_den_ck = add_checkpoint(s_den);
  s_den->add_option("--input", input, ".hmmo or .bvh motion")->required();
  s_den->add_option("--add-noise", sigma, "Gaussian noise sigma in cm added before denoising")
      ->check(CLI::NonNegativeNumber);
  s_den->callback([&] {
    note_checkpoint(o_den_ck);
    action = [&](const RunConfig& c) { return cmd_denoise(c, input, sigma); };
  });

  auto* s_up = sub("upsample", "reconstruct all joints from a random joint subset");
  auto* o_up_ck = add_checkpoint(s_up);
  s_up->add_option("--input", input, ".hmmo or .bvh motion")->required();
  s_up->add_option("--proportion", proportion, "share of joints given to the encoder")->check(CLI::Range(0.0, 1.0));
  s_up->callback([&] {
    note_checkpoint(o_up_ck);
    action = [&](const RunConfig& c) { return cmd_upsample(c, input, proportion); };
  });

  std::string protocol = "all", split;
  std::vector<double> sigmas, proportions;
  std::vector<std::string> unseen;
  auto* s_eval = sub("eval", "evaluation protocols over a dataset split");
  auto* o_eval_ck = add_checkpoint(s_eval);
  auto* o_eval_ds = s_eval->add_option("--dataset", dataset, "dataset directory");
  s_eval->add_option("--protocol", protocol, "representation, denoising, upsampling or all");
  auto* o_sig = s_eval->add_option("--sigmas", sigmas, "noise levels in cm")->delimiter(',');
  auto* o_prop = s_eval->add_option("--proportions", proportions, "joint proportions")->delimiter(',');
  auto* o_unseen = s_eval->add_option("--unseen", unseen, "topologies absent from training")->delimiter(',');
  auto* o_split = s_eval->add_option("--split", split, "train or validation");
  s_eval->callback([&] {
    note_checkpoint(o_eval_ck);
    if (o_eval_ds->count()) flags["dataset"] = dataset;
    if (o_sig->count()) flags["eval"]["sigmas_cm"] = sigmas;
    if (o_prop->count()) flags["eval"]["proportions"] = proportions;
    if (o_unseen->count()) flags["eval"]["unseen_topologies"] = unseen;
    if (o_split->count()) flags["eval"]["split"] = split;
    action = [&](const RunConfig& c) { return cmd_eval(c, protocol); };
  });

  std::vector<std::string> report_inputs, formats{"csv", "svg"};
  auto* s_rep = sub("report", "render CSV and SVG files from saved report JSON");
  s_rep->add_option("inputs", report_inputs, "<protocol>.json files")->required();
  s_rep->add_option("--formats", formats, "csv, svg, json")->delimiter(',');
  s_rep->callback([&] { action = [&](const RunConfig& c) { return cmd_report(c, report_inputs, formats); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const RunConfig cfg = resolve(app, g, flags);
    return action(cfg);
  } catch (const UsageError& e) {
    log(e.what());
    return kUsage;
  } catch (const FileError& e) {
    log(e.what());
    return e.code() == FileErrorCode::kConfigMismatch ? kModel : kData;
  } catch (const DataError& e) {
    log(e.what());
    return kData;
  } catch (const ModelError& e) {
    log(e.what());
    return kModel;
  } catch (const NumericError& e) {
    log(e.what());
    return kNumeric;
  } catch (const std::exception& e) {
    log(e.what());
    return kData;
  }
}
