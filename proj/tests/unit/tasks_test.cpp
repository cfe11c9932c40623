#include <cmath>
#include <fstream>
#include <sstream>

#include "support.hpp"

namespace humot {
namespace {

using test::random_motion;
using test::random_template;
using test::random_tree_topology;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

SkeletonTemplate scaled(const SkeletonTemplate& t, double s) {
  return SkeletonTemplate(t.topology, t.positions * s, t.normalized);
}

std::vector<EvalItem> synthetic_items(int count, std::uint64_t seed) {
  const MotionKind kinds[] = {MotionKind::kIdleSway, MotionKind::kWalkCycle, MotionKind::kArmWave, MotionKind::kSquat};
  std::vector<EvalItem> items;
  for (int i = 0; i < count; ++i) {
    const SkeletonTemplate& generic = i % 2 ? builtin_skeleton23() : builtin_skeleton17();
    SyntheticRequest req;
    req.kind = kinds[i % 4];
    req.morphology.scale = 0.8 + 0.05 * i;
    req.duration = 1.0;
    req.framerate = kModelFramerate;
    req.seed = seed + static_cast<std::uint64_t>(i);
    const MotionSequence seq = generate_synthetic(generic, req);
    items.push_back({"item" + std::to_string(i), extract_chunks(seq).at(0).positions,
                     template_from_sequence(seq, generic), i == 3});
  }
  return items;
}

// ---------------------------------------------------------------------------
// Metrics

TEST(Mpjpe, IdenticalIsZero) {
  const auto seq = random_motion(random_tree_topology(6, 1), 9, 2);
  EXPECT_EQ(mpjpe(seq, seq), 0.0);
}

TEST(Mpjpe, UniformCentimeterOffset) {
  const auto a = random_motion(random_tree_topology(6, 1), 9, 2);
  MotionSequence b = a;
  for (int j = 0; j < b.joint_count(); ++j)
    for (int f = 0; f < b.frame_count(); ++f) b.at(j, 1, f) += 0.01;
  EXPECT_NEAR(mpjpe(a, b), 1.0, 1e-12);
}

TEST(Mpjpe, MatchesDoubleLoopAndIsSymmetric) {
  const auto topo = random_tree_topology(5, 3);
  const auto a = random_motion(topo, 7, 4);
  const auto b = random_motion(topo, 7, 5);
  double sum = 0.0;
  for (int j = 0; j < 5; ++j)
    for (int f = 0; f < 7; ++f) {
      const double dx = a.at(j, 0, f) - b.at(j, 0, f), dy = a.at(j, 1, f) - b.at(j, 1, f),
                   dz = a.at(j, 2, f) - b.at(j, 2, f);
      sum += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
  EXPECT_NEAR(mpjpe(a, b), 100.0 * sum / 35.0, 1e-12);
  EXPECT_EQ(mpjpe(a, b), mpjpe(b, a));
}

TEST(Mpjpe, EqualHalvesAverage) {
  const auto topo = random_tree_topology(5, 3);
  const auto a = random_motion(topo, 8, 6);
  const auto b = random_motion(topo, 8, 7);
  const double whole = mpjpe(a, b);
  const double first = mpjpe(slice_frames(a, 0, 4), slice_frames(b, 0, 4));
  const double second = mpjpe(slice_frames(a, 4, 4), slice_frames(b, 4, 4));
  EXPECT_NEAR(whole, 0.5 * (first + second), 1e-12);
}

TEST(Mpjpe, JointSubsetDecomposition) {
  const auto topo = random_tree_topology(6, 3);
  const auto a = random_motion(topo, 5, 8);
  const auto b = random_motion(topo, 5, 9);
  const std::vector<int> kept{0, 2, 5}, held{1, 3, 4};
  EXPECT_NEAR(6 * mpjpe(a, b), 3 * mpjpe(a, b, kept) + 3 * mpjpe(a, b, held), 1e-10);
  EXPECT_THROW(mpjpe(a, b, {}), DataError);
}

TEST(Mpjpe, ShapeMismatchThrows) {
  const auto topo = random_tree_topology(4, 3);
  EXPECT_THROW(mpjpe(random_motion(topo, 5, 1), random_motion(topo, 6, 1)), DataError);
}

TEST(SkeletonHeight, DirectExtent) {
  Landmarks lm;
  lm.pelvis = 0;
  lm.left_foot = 1;
  lm.right_foot = 2;
  lm.head_top = 3;
  const SkeletonTopology topo("stick", {"pelvis", "lf", "rf", "top"}, {-1, 0, 0, 0}, {false, true, true, false}, lm);
  JointPositions pos(4, 3);
  pos << 0, 0, 0.9, -0.1, 0, 0, 0.1, 0, 0.02, 0, 0, 1.8;
  const SkeletonTemplate t(topo, pos, true);
  EXPECT_DOUBLE_EQ(skeleton_height(t), 1.8);
  EXPECT_DOUBLE_EQ(skeleton_height(scaled(t, 2.0)), 3.6);
}

TEST(SkeletonHeight, BuiltinSeventeenJoint) {
  // head_top at z = 0.76, ankles at z = -0.90 in the neutral pose table
  EXPECT_NEAR(skeleton_height(builtin_skeleton17()), 1.66, 1e-9);
  // head_top at z = 0.78, toes at z = -0.96
  EXPECT_NEAR(skeleton_height(builtin_skeleton23()), 1.74, 1e-9);
}

TEST(SkeletonHeight, MissingLandmarksThrow) {
  EXPECT_THROW(skeleton_height(random_template(test::chain_topology(4), 1)), DataError);
}

TEST(NormalizedMpjpe, UnitInvariant) {
  const SkeletonTemplate& t = builtin_skeleton17();
  const auto a = random_motion(t.topology, 6, 1);
  const auto b = random_motion(t.topology, 6, 2);
  MotionSequence ac = a, bc = b;
  for (double& v : ac.data()) v *= 100.0;
  for (double& v : bc.data()) v *= 100.0;
  EXPECT_NEAR(normalized_mpjpe(ac, bc, scaled(t, 100.0)), normalized_mpjpe(a, b, t), 1e-12);
}

// ---------------------------------------------------------------------------
// Retargeting

TEST(Retarget, WindowStarts) {
  EXPECT_EQ(window_starts(20, 30, 6), (std::vector<int>{0}));
  EXPECT_EQ(window_starts(30, 30, 6), (std::vector<int>{0}));
  EXPECT_EQ(window_starts(36, 30, 6), (std::vector<int>{0, 6}));
  EXPECT_EQ(window_starts(40, 30, 6), (std::vector<int>{0, 6, 10}));
  EXPECT_THROW(window_starts(40, 0, 6), UsageError);
}

TEST(Retarget, LegRatioScalesTrajectory) {
  const SkeletonTemplate& src = builtin_skeleton17();
  const SkeletonTemplate tgt = scaled(src, 2.0);
  EXPECT_NEAR(leg_length_ratio(src, tgt), 2.0, 1e-12);

  SyntheticRequest req;
  req.kind = MotionKind::kWalkCycle;
  req.duration = 2.0;
  req.framerate = kModelFramerate;
  const MotionSequence seq = generate_synthetic(src, req);
  const auto in = retarget_trajectory(seq, src, src);
  const auto out = retarget_trajectory(seq, src, tgt);
  ASSERT_EQ(in.size(), out.size());
  ASSERT_GT(in.size(), 2u);
  const double travelled = (in.back() - in.front()).norm();
  EXPECT_GT(travelled, 0.1);
  EXPECT_NEAR((out.back() - out.front()).norm(), 2.0 * travelled, 1e-9);
}

TEST(Retarget, UnwindowedSelfRetargetIsReconstruction) {
  MotionAutoencoder<double> model(ModelConfig::tiny(), 4);
  const auto items = synthetic_items(1, 5);
  RetargetOptions opt;
  opt.windowed = false;
  const auto a = retarget(items[0].motion, items[0].skeleton, items[0].skeleton, model, opt);
  const auto b = decode(encode(items[0].motion, items[0].skeleton, model), items[0].skeleton, model);
  EXPECT_TRUE(std::ranges::equal(a.data(), b.data()));
}

TEST(Retarget, SingleWindowRestoresScaledOffset) {
  MotionAutoencoder<double> model(ModelConfig::tiny(), 4);
  const SkeletonTemplate& src = builtin_skeleton17();
  const SkeletonTemplate tgt = scaled(src, 1.5);
  SyntheticRequest req;
  req.kind = MotionKind::kWalkCycle;
  req.duration = 1.0;
  req.framerate = kModelFramerate;
  const MotionSequence seq = generate_synthetic(src, req);
  ASSERT_EQ(seq.frame_count(), 30);
  const Vec3 mean = masked_mean_position(seq, normalization_mask(seq.topology()));
  const auto base = decode(encode(translate(seq, -mean), src, model), tgt, model);
  const auto got = retarget(seq, src, tgt, model);
  for (int j = 0; j < 17; ++j)
    for (int f = 0; f < 30; ++f) EXPECT_NEAR((got.point(j, f) - base.point(j, f) - 1.5 * mean).norm(), 0.0, 1e-12);
}

TEST(Retarget, LongSequencesCrossFade) {
  MotionAutoencoder<double> model(ModelConfig::tiny(), 4);
  const SkeletonTemplate& src = builtin_skeleton23();
  SyntheticRequest req;
  req.kind = MotionKind::kComposite;
  req.duration = 3.0;
  req.framerate = kModelFramerate;
  const MotionSequence seq = generate_synthetic(src, req);
  const auto out = retarget(seq, src, builtin_skeleton17(), model);
  EXPECT_EQ(out.joint_count(), 17);
  EXPECT_EQ(out.frame_count(), seq.frame_count());
  for (double v : out.data()) ASSERT_TRUE(std::isfinite(v));
}

TEST(Retarget, SourceMismatchThrows) {
  MotionAutoencoder<double> model(ModelConfig::tiny(), 4);
  const auto seq = random_motion(builtin_skeleton17().topology, 30, 1);
  EXPECT_THROW(retarget(seq, builtin_skeleton23(), builtin_skeleton23(), model), DataError);
}

// ---------------------------------------------------------------------------
// Evaluation protocols

TEST(Evaluation, RepresentationIsFiniteAndFlagsUnseen) {
  MotionAutoencoder<double> model(ModelConfig::tiny(), 6);
  const auto items = synthetic_items(4, 10);
  const EvalReport rep = eval_representation(items, model);
  ASSERT_EQ(rep.rows.size(), 4u);
  for (const auto& r : rep.rows) {
    EXPECT_TRUE(std::isfinite(r.mpjpe));
    EXPECT_GT(r.mpjpe, 0.0);
    EXPECT_TRUE(std::isnan(r.kept_mpjpe));
  }
  EXPECT_TRUE(rep.rows[3].unseen);
  EXPECT_FALSE(rep.rows[0].unseen);
  EXPECT_EQ(rep.fingerprint, model_fingerprint(model));
}

TEST(Evaluation, AggregatesRecomputeFromRows) {
  EvalReport rep{"representation", "", "f", {}};
  rep.rows.push_back({"a", "t1", false, 0.0, 0.0, 1.0, 0.1});
  rep.rows.push_back({"b", "t1", false, 0.0, 0.0, 3.0, 0.3});
  rep.rows.push_back({"c", "t2", true, 0.0, 0.0, 8.0, 0.4});
  const auto aggs = rep.aggregates();
  ASSERT_EQ(aggs.size(), 3u);
  for (const auto& a : aggs) {
    if (a.topology == "t1") {
      EXPECT_EQ(a.count, 2);
      EXPECT_DOUBLE_EQ(a.mean, 2.0);
      EXPECT_DOUBLE_EQ(a.stddev, 1.0);
      EXPECT_DOUBLE_EQ(a.normalized_mean, 0.2);
    } else if (a.topology == "t2") {
      EXPECT_EQ(a.count, 1);
      EXPECT_DOUBLE_EQ(a.stddev, 0.0);
    } else {
      EXPECT_EQ(a.topology, "all");
      EXPECT_DOUBLE_EQ(a.mean, 4.0);
      EXPECT_NEAR(a.stddev, std::sqrt((9.0 + 1.0 + 16.0) / 3.0), 1e-12);
    }
  }
}

TEST(Evaluation, ZeroNoiseEqualsRepresentation) {
  MotionAutoencoder<double> model(ModelConfig::tiny(), 6);
  const auto items = synthetic_items(3, 20);
  const EvalReport rep = eval_representation(items, model);
  const EvalReport den = eval_denoising(items, model, {0.0}, 1);
  ASSERT_EQ(den.rows.size(), rep.rows.size());
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    EXPECT_EQ(den.rows[i].mpjpe, rep.rows[i].mpjpe);
    EXPECT_EQ(den.rows[i].input_mpjpe, 0.0);
  }
}

TEST(Evaluation, NoiseInputErrorMatchesGaussianNorm) {
  MotionAutoencoder<double> model(ModelConfig::tiny(), 6);
  const auto items = synthetic_items(20, 30);
  const double expected_norm = 2.0 * std::sqrt(2.0 / M_PI);  // E|N(0, I3)|
  const EvalReport den = eval_denoising(items, model, {1.0, 5.0}, 7);
  for (double sigma : {1.0, 5.0}) {
    const double input = den.pooled(sigma).input_mean;
    EXPECT_NEAR(input / (sigma * expected_norm), 1.0, 0.02) << "sigma " << sigma;
  }
}

TEST(Evaluation, FullProportionEqualsRepresentation) {
  MotionAutoencoder<double> model(ModelConfig::tiny(), 6);
  const auto items = synthetic_items(3, 40);
  const EvalReport rep = eval_representation(items, model);
  const EvalReport up = eval_upsampling(items, model, {1.0}, 1);
  ASSERT_EQ(up.rows.size(), rep.rows.size());
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    EXPECT_EQ(up.rows[i].mpjpe, rep.rows[i].mpjpe);
    EXPECT_EQ(up.rows[i].kept_mpjpe, rep.rows[i].mpjpe);
    EXPECT_TRUE(std::isnan(up.rows[i].heldout_mpjpe));
  }
}

TEST(Evaluation, UpsamplingRowsDecompose) {
  MotionAutoencoder<double> model(ModelConfig::tiny(), 6);
  const auto items = synthetic_items(4, 50);
  const EvalReport up = eval_upsampling(items, model, {0.5}, 3);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& r = up.rows[i];
    const int J = items[i].skeleton.joint_count();
    const int K = kept_joint_count(0.5, J);
    EXPECT_NEAR(J * r.mpjpe, K * r.kept_mpjpe + (J - K) * r.heldout_mpjpe, 1e-9);
  }
}

TEST(Evaluation, SubsetsKeepPelvis) {
  const auto& topo = builtin_skeleton23().topology;
  EXPECT_EQ(kept_joint_count(0.5, 23), 12);
  EXPECT_EQ(kept_joint_count(0.01, 23), 2);
  EXPECT_EQ(kept_joint_count(1.0, 23), 23);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const JointSubset sub = random_subset_with_pelvis(topo, 7, s);
    EXPECT_EQ(sub.kept.size(), 7u);
    EXPECT_TRUE(std::ranges::find(sub.kept, topo.root()) != sub.kept.end());
  }
}

TEST(Evaluation, DeterministicGivenSeed) {
  MotionAutoencoder<double> model(ModelConfig::tiny(), 6);
  const auto items = synthetic_items(2, 60);
  const auto a = eval_upsampling(items, model, {0.4, 0.7}, 9);
  const auto b = eval_upsampling(items, model, {0.4, 0.7}, 9);
  EXPECT_EQ(report_csv(a), report_csv(b));
  const auto c = eval_denoising(items, model, {3.0}, 9);
  const auto d = eval_denoising(items, model, {3.0}, 9);
  EXPECT_EQ(report_csv(c), report_csv(d));
  EXPECT_THROW(eval_upsampling(items, model, {0.0}, 9), UsageError);
  EXPECT_THROW(eval_denoising(items, model, {-1.0}, 9), UsageError);
}

TEST(Evaluation, FingersExcluded) {
  Landmarks lm;
  lm.pelvis = 0;
  const SkeletonTopology topo("hand", {"pelvis", "wrist", "index1", "thumb1"}, {-1, 0, 1, 1},
                              {false, true, false, false}, lm);
  const EvalItem item{"h", random_motion(topo, 4, 1), random_template(topo, 2), false};
  const EvalItem stripped = without_fingers(item);
  EXPECT_EQ(stripped.skeleton.joint_count(), 2);
  EXPECT_EQ(stripped.motion.joint_count(), 2);
}

// ---------------------------------------------------------------------------
// Reports

EvalReport sample_sweep() {
  EvalReport rep{"denoising", "sigma_cm", "abc", {}};
  rep.rows.push_back({"a", "body17", false, 0.0, 0.0, 1.5, 0.01});
  rep.rows.push_back({"b", "body23", true, 0.0, 0.0, 2.5, 0.02});
  rep.rows.push_back({"a", "body17", false, 5.0, 8.0, 4.0, 0.03});
  rep.rows.push_back({"b", "body23", true, 5.0, 8.2, 5.0, 0.04});
  return rep;
}

TEST(Report, EmptyReportIsHeaderOnly) {
  const EvalReport rep{"representation", "", "x", {}};
  EXPECT_EQ(report_csv(rep), std::string(kReportColumns) + "\n");
  EXPECT_EQ(summary_csv(rep), std::string(kSummaryColumns) + "\n");
}

TEST(Report, CsvColumnsAndNaNFields) {
  const std::string csv = report_csv(sample_sweep());
  std::istringstream is(csv);
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  EXPECT_EQ(header,
            "protocol,item,topology,unseen,sweep,input_mpjpe_cm,mpjpe_cm,normalized_mpjpe,kept_mpjpe_cm,heldout_mpjpe_cm");
  EXPECT_EQ(std::count(first.begin(), first.end(), ','), 9);
  EXPECT_EQ(first.substr(first.size() - 2), ",,");
}

TEST(Report, EmissionIsByteIdentical) {
  const auto d1 = test::temp_dir("report1");
  const auto d2 = test::temp_dir("report2");
  const auto formats = std::vector{ReportFormat::kCsv, ReportFormat::kSvg, ReportFormat::kJson};
  const auto p1 = emit_report(sample_sweep(), d1, formats);
  const auto p2 = emit_report(sample_sweep(), d2, formats);
  ASSERT_EQ(p1.size(), 4u);
  ASSERT_EQ(p1.size(), p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    EXPECT_EQ(p1[i].filename(), p2[i].filename());
    EXPECT_EQ(slurp(p1[i]), slurp(p2[i])) << p1[i];
  }
}

TEST(Report, SweepPlotHasDiagonalReference) {
  const std::string svg = report_svg(sample_sweep());
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
  EXPECT_NE(svg.find("input MPJPE"), std::string::npos);

  EvalReport up = sample_sweep();
  up.protocol = "upsampling";
  up.sweep_axis = "proportion";
  EXPECT_EQ(report_svg(up).find("stroke-dasharray"), std::string::npos);
}

TEST(Report, NoPlotWithoutSweep) {
  const auto dir = test::temp_dir("report_nosweep");
  EvalReport rep{"representation", "", "x", {}};
  rep.rows.push_back({"a", "body17", false, 0.0, 0.0, 1.0, 0.01});
  const auto paths = emit_report(rep, dir);
  for (const auto& p : paths) EXPECT_NE(p.extension(), ".svg");
}

TEST(Report, JsonRoundTrip) {
  const EvalReport rep = sample_sweep();
  const EvalReport back = nlohmann::json(rep).get<EvalReport>();
  EXPECT_EQ(report_csv(back), report_csv(rep));
  EXPECT_EQ(back.sweep_axis, rep.sweep_axis);
  EXPECT_EQ(back.fingerprint, rep.fingerprint);
}

}  // namespace
}  // namespace humot
