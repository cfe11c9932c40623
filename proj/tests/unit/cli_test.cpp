#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support.hpp"

namespace humot {
namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration precedence

TEST(RunConfig, DefaultsResolve) {
  const RunConfig c = resolve_run_config({}, nullptr, nullptr);
  EXPECT_EQ(c, RunConfig{});
  EXPECT_EQ(c.train.batch_size, 32);
  EXPECT_EQ(c.model.channels, 128);
}

TEST(RunConfig, EnvironmentPointers) {
  EXPECT_EQ(detail::env_pointer("HUMOT_TRAIN__BATCH_SIZE").to_string(), "/train/batch_size");
  EXPECT_EQ(detail::env_pointer("HUMOT_SEED").to_string(), "/seed");
  EXPECT_EQ(detail::env_pointer("HUMOT_MODEL__LATENT_SIZE").to_string(), "/model/latent_size");
}

TEST(RunConfig, FlagsOverFileOverEnvironmentOverDefaults) {
  const std::map<std::string, std::string> env{
      {"HUMOT_TRAIN__BATCH_SIZE", "16"}, {"HUMOT_TRAIN__LR_MAX", "0.002"}, {"HUMOT_OUT", "env_out"}, {"HUMOT_SEED", "3"}};
  const nlohmann::json file = {{"train", {{"lr_max", 0.003}}}, {"out", "file_out"}, {"seed", 4}};
  const nlohmann::json flags = {{"out", "flag_out"}};

  const RunConfig e = resolve_run_config(env, nullptr, nullptr);
  EXPECT_EQ(e.train.batch_size, 16);
  EXPECT_EQ(e.train.lr_max, 0.002);
  EXPECT_EQ(e.out, "env_out");
  EXPECT_EQ(e.seed, 3u);

  const RunConfig f = resolve_run_config(env, file, nullptr);
  EXPECT_EQ(f.train.batch_size, 16);
  EXPECT_EQ(f.train.lr_max, 0.003);
  EXPECT_EQ(f.out, "file_out");
  EXPECT_EQ(f.seed, 4u);

  const RunConfig g = resolve_run_config(env, file, flags);
  EXPECT_EQ(g.out, "flag_out");
  EXPECT_EQ(g.train.lr_max, 0.003);
  EXPECT_EQ(g.seed, 4u);
  EXPECT_EQ(g.train.seed, 4u);
}

TEST(RunConfig, PartialFileKeepsOtherDefaults) {
  const RunConfig c = resolve_run_config({}, {{"model", {{"latent_size", 64}}}}, nullptr);
  EXPECT_EQ(c.model.latent_size, 64);
  EXPECT_EQ(c.model.channels, 128);
  EXPECT_EQ(c.model.motion_conv_widths, ModelConfig{}.motion_conv_widths);
}

TEST(RunConfig, RejectsBadInput) {
  EXPECT_THROW(resolve_run_config({{"HUMOT_NOPE", "1"}}, nullptr, nullptr), UsageError);
  EXPECT_THROW(resolve_run_config({{"HUMOT_TRAIN__BATCH_SIZE", "many"}}, nullptr, nullptr), UsageError);
  EXPECT_THROW(resolve_run_config({{"HUMOT_RESUME", "1"}}, nullptr, nullptr), UsageError);
  EXPECT_THROW(resolve_run_config({}, nlohmann::json::array(), nullptr), UsageError);
  EXPECT_THROW(resolve_run_config({}, {{"train", {{"batch_size", "x"}}}}, nullptr), UsageError);
  EXPECT_THROW(resolve_run_config({}, {{"train", {{"batch_size", 0}}}}, nullptr), UsageError);
  EXPECT_THROW(resolve_run_config({}, nullptr, {{"device", "cuda"}}), UsageError);
  EXPECT_THROW(resolve_run_config({}, {{"model", {{"heads", 7}}}}, nullptr), ModelError);
}

TEST(RunConfig, ProvenanceRoundTrip) {
  const auto dir = test::temp_dir("run_config");
  RunConfig c = resolve_run_config({{"HUMOT_TRAIN__ITERATIONS", "17"}}, {{"model", ModelConfig::tiny()}}, {{"seed", 9}});
  write_run_config(c, dir, "train");
  const auto j = nlohmann::json::parse(std::ifstream(dir / "run_config.json"));
  EXPECT_EQ(j.at("command"), "train");
  const RunConfig back = resolve_run_config({}, j, nullptr);
  EXPECT_EQ(back, c);
}

// ---------------------------------------------------------------------------
// The command-line tool

struct ToolResult {
  int code = -1;
  std::string out;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

ToolResult run_tool(const std::string& args, const fs::path& cwd, const std::string& env = "") {
  const fs::path log = cwd / "tool_output.txt";
  const std::string cmd = "cd " + quote(cwd.string()) + " && " + env + " " + quote(HUMOT_TOOL_PATH) + " " + args +
                          " > " + quote(log.string()) + " 2>&1";
  const int status = std::system(cmd.c_str());
  ToolResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream is(log);
  r.out.assign(std::istreambuf_iterator<char>(is), {});
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

std::vector<std::string> csv_column(const fs::path& p, const std::string& name) {
  const auto rows = lines(p);
  std::vector<std::string> out;
  if (rows.empty()) return out;
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::stringstream ss(s);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    if (!s.empty() && s.back() == ',') f.emplace_back();
    return f;
  };
  const auto header = split(rows[0]);
  const auto col = std::find(header.begin(), header.end(), name) - header.begin();
  for (std::size_t i = 1; i < rows.size(); ++i) out.push_back(split(rows[i]).at(col));
  return out;
}

/// Work directory with a prepared dataset and a tiny model config, shared
/// by the tool tests.
class Tool : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = test::temp_dir("tool");
    std::ofstream(dir_ / "tiny.json") << nlohmann::json{{"model", ModelConfig::tiny()}}.dump(2);
    ASSERT_EQ(run_tool("synth --topology body17 --kind walk-cycle --duration 2 --fps 60 --format hmmo --out clips", dir_).code, 0);
    ASSERT_EQ(run_tool("synth --topology body23 --kind arm-wave --duration 2 --fps 60 --format hmmo --out clips", dir_).code, 0);
    const auto r = run_tool("prepare clips --out data --seed 1", dir_);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto t = run_tool("--config tiny.json train --dataset data --iterations 12 --batch-size 4 --out run", dir_);
    ASSERT_EQ(t.code, 0) << t.out;
  }

  static fs::path dir_;
};

fs::path Tool::dir_;

TEST_F(Tool, PrepareCountsChunks) {
  const Dataset ds = read_dataset(dir_ / "data");
  // two 2 s clips at 60 Hz resampled to 30 Hz: floor((60 - 30) / 6) + 1 = 6 each
  EXPECT_EQ(ds.chunks.size(), 12u);
}

TEST_F(Tool, PrepareIsDeterministic) {
  ASSERT_EQ(run_tool("prepare clips --out data2 --seed 1", dir_).code, 0);
  EXPECT_EQ(slurp(dir_ / "data" / "manifest.txt"), slurp(dir_ / "data2" / "manifest.txt"));
}

TEST_F(Tool, PrepareHoldoutOnlyInValidation) {
  ASSERT_EQ(run_tool("prepare clips --out data_hold --holdout-topology body23", dir_).code, 0);
  const Dataset ds = read_dataset(dir_ / "data_hold");
  int held = 0;
  for (const auto& c : ds.chunks)
    if (ds.template_for(c).topology.id() == "body23") {
      ++held;
      EXPECT_EQ(c.split, Split::kValidation);
    }
  EXPECT_EQ(held, 6);
}

TEST_F(Tool, PrepareRejectsBadInput) {
  std::ofstream(dir_ / "broken.bvh") << "HIERARCHY\nROOT oops {\n";
  const auto r = run_tool("prepare broken.bvh --out data_bad", dir_);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("broken.bvh"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "data_bad" / "manifest.txt"));
}

TEST_F(Tool, TrainWritesOneMetricRowPerStep) {
  EXPECT_EQ(lines(dir_ / "run" / "metrics.csv").size(), 13u);
  EXPECT_TRUE(fs::exists(dir_ / "run" / "last.hmcp"));
  const auto j = nlohmann::json::parse(std::ifstream(dir_ / "run" / "run_config.json"));
  EXPECT_EQ(j.at("command"), "train");
  EXPECT_EQ(j.at("model").get<ModelConfig>(), ModelConfig::tiny());
}

TEST_F(Tool, TrainSmokeHundredSteps) {
  const auto r = run_tool("--config tiny.json train --dataset data --iterations 100 --batch-size 2 --out run100", dir_);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rows = lines(dir_ / "run100" / "metrics.csv");
  EXPECT_EQ(rows.size(), 101u);
  EXPECT_EQ(rows.front(), "step,lr,l_rec,l_blc,total");
}

TEST_F(Tool, FinetuneUsesConstantRate) {
  const auto r = run_tool("--config tiny.json finetune --dataset data --checkpoint run/last.hmcp --iterations 6 "
                          "--batch-size 2 --out ft",
                          dir_);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto lr = csv_column(dir_ / "ft" / "metrics.csv", "lr");
  ASSERT_EQ(lr.size(), 6u);
  for (const auto& v : lr) EXPECT_EQ(std::stod(v), 5e-5);
}

TEST_F(Tool, ResumeMatchesUninterrupted) {
  const std::string base = "--config tiny.json train --dataset data --batch-size 3 --seed 4 ";
  ASSERT_EQ(run_tool(base + "--iterations 8 --out full", dir_).code, 0);
  ASSERT_EQ(run_tool(base + "--iterations 5 --out part", dir_).code, 0);
  const auto r = run_tool(base + "--iterations 8 --out part --resume", dir_);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(slurp(dir_ / "full" / "metrics.csv"), slurp(dir_ / "part" / "metrics.csv"));
}

TEST_F(Tool, EnvironmentOverridesApply) {
  const auto r = run_tool("--config tiny.json train --dataset data --batch-size 2 --out envrun", dir_,
                          "HUMOT_TRAIN__ITERATIONS=3");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(lines(dir_ / "envrun" / "metrics.csv").size(), 4u);
  // flags win over the environment
  const auto f = run_tool("--config tiny.json train --dataset data --batch-size 2 --iterations 2 --out envrun2", dir_,
                          "HUMOT_TRAIN__ITERATIONS=3");
  ASSERT_EQ(f.code, 0) << f.out;
  EXPECT_EQ(lines(dir_ / "envrun2" / "metrics.csv").size(), 3u);
}

TEST_F(Tool, ZeroNoiseEvalEqualsRepresentation) {
  ASSERT_EQ(run_tool("eval --checkpoint run/last.hmcp --dataset data --protocol representation --out ev", dir_).code, 0);
  ASSERT_EQ(
      run_tool("eval --checkpoint run/last.hmcp --dataset data --protocol denoising --sigmas 0 --out ev", dir_).code, 0);
  const auto rep = csv_column(dir_ / "ev" / "representation.csv", "mpjpe_cm");
  const auto den = csv_column(dir_ / "ev" / "denoising.csv", "mpjpe_cm");
  ASSERT_FALSE(rep.empty());
  EXPECT_EQ(rep, den);
}

TEST_F(Tool, SelfRetargetEqualsEncodeDecode) {
  const std::string clip = "clips/body23_arm-wave_000.hmmo";
  ASSERT_TRUE(fs::exists(dir_ / clip)) << "missing " << clip;
  ASSERT_EQ(run_tool("encode --checkpoint run/last.hmcp --input " + clip + " --out codec", dir_).code, 0);
  ASSERT_EQ(run_tool("decode --checkpoint run/last.hmcp --latent codec/body23_arm-wave_000.hmlz --template " + clip +
                         " --out codec",
                     dir_)
                .code,
            0);
  ASSERT_EQ(
      run_tool("retarget --checkpoint run/last.hmcp --input " + clip + " --target " + clip + " --whole --out ret", dir_)
          .code,
      0);
  const MotionFile a = load_motion(dir_ / "codec" / "body23_arm-wave_000.hmmo");
  const MotionFile b = load_motion(dir_ / "ret" / "body23_arm-wave_000_retargeted.hmmo");
  ASSERT_EQ(a.motion.frame_count(), b.motion.frame_count());
  EXPECT_TRUE(std::ranges::equal(a.motion.data(), b.motion.data()));
}

TEST_F(Tool, DenoiseAndUpsampleWriteOutputs) {
  const std::string clip = "clips/body17_walk-cycle_000.hmmo";
  const auto d = run_tool("denoise --checkpoint run/last.hmcp --input " + clip + " --add-noise 3 --out den", dir_);
  ASSERT_EQ(d.code, 0) << d.out;
  EXPECT_TRUE(fs::exists(dir_ / "den" / "body17_walk-cycle_000_denoised.hmmo"));
  const auto u = run_tool("upsample --checkpoint run/last.hmcp --input " + clip + " --proportion 0.5 --out up", dir_);
  ASSERT_EQ(u.code, 0) << u.out;
  EXPECT_TRUE(fs::exists(dir_ / "up" / "body17_walk-cycle_000_upsampled.hmmo"));
}

TEST_F(Tool, ExitCodes) {
  EXPECT_EQ(run_tool("train --no-such-flag", dir_).code, 2);
  EXPECT_EQ(run_tool("--device cuda train --dataset data --iterations 1", dir_).code, 2);
  EXPECT_EQ(run_tool("train --dataset missing_dir --iterations 1", dir_).code, 3);
  // explicit model configuration differing from the checkpoint
  std::ofstream(dir_ / "other.json") << nlohmann::json{{"model", {{"latent_size", 6}, {"channels", 8}}}}.dump();
  EXPECT_EQ(run_tool("--config other.json eval --checkpoint run/last.hmcp --dataset data --out ev2", dir_).code, 4);
}

TEST_F(Tool, NumericFailureKeepsLastGoodCheckpoint) {
  MotionAutoencoder<float> model(ModelConfig::tiny(), 1);
  model.parameters()[model.latent_token_id()].value.setConstant(std::numeric_limits<float>::infinity());
  save_checkpoint(dir_ / "inf.hmcp", model, TrainConfig{}, 0);
  const auto r = run_tool("--config tiny.json finetune --dataset data --checkpoint inf.hmcp --iterations 3 "
                          "--batch-size 2 --out nan_run",
                          dir_);
  EXPECT_EQ(r.code, 5) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "nan_run" / "last.hmcp"));
  EXPECT_EQ(lines(dir_ / "nan_run" / "metrics.csv").size(), 1u);
}

TEST_F(Tool, ReportRegeneratesFromJson) {
  ASSERT_EQ(run_tool("eval --checkpoint run/last.hmcp --dataset data --protocol upsampling --proportions 0.5,1 "
                     "--out evr",
                     dir_)
                .code,
            0);
  const std::string csv = slurp(dir_ / "evr" / "upsampling.csv");
  ASSERT_EQ(run_tool("report evr/upsampling.json --formats csv,svg --out rep", dir_).code, 0);
  EXPECT_EQ(slurp(dir_ / "rep" / "upsampling.csv"), csv);
  EXPECT_TRUE(fs::exists(dir_ / "rep" / "upsampling.svg"));
}

}  // namespace
}  // namespace humot
