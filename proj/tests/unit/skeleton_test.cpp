#include "support.hpp"

namespace humot {
namespace {

using test::chain_topology;
using test::random_motion;
using test::random_tree_topology;

TEST(Topology, RejectsInvalidTrees) {
  Landmarks lm;
  lm.pelvis = 0;
  EXPECT_THROW(SkeletonTopology("x", {"a"}, {-1}, {false}, lm), DataError);
  EXPECT_THROW(SkeletonTopology("x", {"a", "b"}, {-1, -1}, {false, false}, lm), DataError);
  EXPECT_THROW(SkeletonTopology("x", {"a", "b", "c"}, {-1, 2, 1}, {false, false, false}, lm), DataError);
  Landmarks bad = lm;
  bad.left_hip = 7;
  EXPECT_THROW(SkeletonTopology("x", {"a", "b"}, {-1, 0}, {false, false}, bad), DataError);
}

TEST(MotionSequence, RejectsNonFinite) {
  auto topo = chain_topology(2);
  std::vector<double> data(6, 0.0);
  data[3] = std::nan("");
  EXPECT_THROW(MotionSequence(topo, data, 1, 30.0), DataError);
  EXPECT_THROW(MotionSequence(topo, 0, 30.0), DataError);
}

TEST(BoneLengths, UnitOffsetChain) {
  MotionSequence seq(chain_topology(2), 3, 30.0);
  for (int f = 0; f < 3; ++f) seq.set_point(1, f, Vec3(0, 0, 1));
  const Eigen::MatrixXd L = bone_lengths(seq);
  ASSERT_EQ(L.rows(), 1);
  ASSERT_EQ(L.cols(), 3);
  for (int f = 0; f < 3; ++f) EXPECT_EQ(L(0, f), 1.0);
}

TEST(BoneLengths, TemplateAsOneFrameSequence) {
  const SkeletonTemplate& t = builtin_skeleton23();
  MotionSequence seq(t.topology, 1, 30.0);
  for (int j = 0; j < t.joint_count(); ++j) seq.set_point(j, 0, t.joint(j));
  const Eigen::MatrixXd L = bone_lengths(seq);
  const Eigen::VectorXd T = bone_lengths(t);
  ASSERT_EQ(L.rows(), T.size());
  for (int b = 0; b < T.size(); ++b) EXPECT_DOUBLE_EQ(L(b, 0), T(b));
}

TEST(BoneLengths, MatchesPairwiseDistanceOracle) {
  const auto topo = random_tree_topology(5, 11);
  const MotionSequence seq = random_motion(topo, 4, 12);
  const Eigen::MatrixXd L = bone_lengths(seq);
  const auto& bones = topo.bone_joints();
  ASSERT_EQ(static_cast<int>(bones.size()), 4);
  for (int b = 0; b < 4; ++b) {
    const int j = bones[b], p = topo.parent(j);
    for (int f = 0; f < 4; ++f) {
      double ss = 0.0;
      for (int a = 0; a < 3; ++a) ss += (seq.at(j, a, f) - seq.at(p, a, f)) * (seq.at(j, a, f) - seq.at(p, a, f));
      EXPECT_NEAR(L(b, f), std::sqrt(ss), 1e-15);
    }
  }
}

TEST(BoneLengths, RigidTransformInvariance) {
  const auto topo = random_tree_topology(9, 3);
  const MotionSequence seq = random_motion(topo, 7, 4);
  const Mat3 R = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  const Vec3 t(3, -1, 2);
  MotionSequence moved = seq;
  for (int j = 0; j < seq.joint_count(); ++j)
    for (int f = 0; f < seq.frame_count(); ++f) moved.set_point(j, f, R * seq.point(j, f) + t);
  const Eigen::MatrixXd a = bone_lengths(seq), b = bone_lengths(moved);
  for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-9 * a.data()[i]);
}

SkeletonTemplate rigidly_moved(const SkeletonTemplate& t, const Mat3& R, const Vec3& d) {
  JointPositions pos(t.joint_count(), 3);
  for (int j = 0; j < t.joint_count(); ++j) pos.row(j) = (R * t.joint(j) + d).transpose();
  return SkeletonTemplate(t.topology, pos, false);
}

TEST(NormalizeTemplate, FixedPointOnNormalizedInput) {
  const SkeletonTemplate& t = builtin_skeleton17();
  ASSERT_TRUE(t.normalized);
  const SkeletonTemplate n = normalize_template(t);
  EXPECT_LT((n.positions - t.positions).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NormalizeTemplate, RemovesTranslation) {
  const SkeletonTemplate& t = builtin_skeleton23();
  const SkeletonTemplate n = normalize_template(rigidly_moved(t, Mat3::Identity(), Vec3(1, 2, 3)));
  EXPECT_LT(n.joint(n.topology.root()).norm(), 1e-12);
  EXPECT_LT((n.positions - t.positions).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NormalizeTemplate, RecoversKnownRotationAboutX) {
  const SkeletonTemplate& t = builtin_skeleton23();
  const SkeletonTemplate n = normalize_template(rigidly_moved(t, test::rotation_x(0.9), Vec3(0.2, -0.4, 1.1)));
  EXPECT_LT((n.positions - t.positions).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(NormalizeTemplate, PlanesAndLengths) {
  const SkeletonTemplate& ref = builtin_skeleton23();
  const Mat3 R = Eigen::AngleAxisd(2.1, Vec3(0.3, -1, 0.5).normalized()).toRotationMatrix();
  const SkeletonTemplate moved = rigidly_moved(ref, R, Vec3(-2, 5, 0.5));
  const SkeletonTemplate n = normalize_template(moved);
  const Landmarks& lm = n.topology.landmarks();
  EXPECT_LT(n.joint(lm.pelvis).norm(), 1e-6);
  const Vec3 hips = n.joint(lm.right_hip) - n.joint(lm.left_hip);
  EXPECT_LT(std::abs(std::asin(hips.normalized().z())), 1e-6);  // hip axis in XY
  EXPECT_LT(std::abs(hips.normalized().y()), 1e-6);              // and along X
  const Vec3 up = 0.5 * (n.joint(lm.left_shoulder) + n.joint(lm.right_shoulder)) - n.joint(lm.pelvis);
  EXPECT_LT(std::abs(up.y()), 1e-6 * up.norm());  // body-up direction in XZ
  EXPECT_GT(up.z(), 0.0);
  const Eigen::VectorXd a = bone_lengths(moved), b = bone_lengths(n);
  for (int i = 0; i < a.size(); ++i) EXPECT_NEAR(a(i), b(i), 1e-9 * a(i));
}

TEST(NormalizeTemplate, Idempotent) {
  const SkeletonTemplate moved = rigidly_moved(builtin_skeleton17(), test::rotation_x(-0.4), Vec3(1, 1, 1));
  const SkeletonTemplate once = normalize_template(moved);
  const SkeletonTemplate twice = normalize_template(once);
  EXPECT_LT((once.positions - twice.positions).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(NormalizeTemplate, DegenerateLandmarks) {
  SkeletonTemplate t = builtin_skeleton17();
  JointPositions pos = t.positions;
  const Landmarks& lm = t.topology.landmarks();
  pos.row(lm.right_hip) = pos.row(lm.left_hip) + Eigen::RowVector3d(0, 0, 1e-12);
  // coincident hips (the bone stays non-zero through the small offset)
  EXPECT_THROW(normalize_template(SkeletonTemplate(t.topology, pos)), NumericError);
}

MotionSequence posed(const SkeletonTemplate& t, int frames, double scale) {
  MotionSequence seq(t.topology, frames, 30.0);
  for (int f = 0; f < frames; ++f) {
    const Mat3 R = Eigen::AngleAxisd(0.1 * f, Vec3::UnitZ()).toRotationMatrix();
    for (int j = 0; j < t.joint_count(); ++j) seq.set_point(j, f, R * (scale * t.joint(j)) + Vec3(0.1 * f, 0, 0));
  }
  return seq;
}

TEST(TemplateFromSequence, UnitScaleReturnsGeneric) {
  const SkeletonTemplate& g = builtin_skeleton23();
  const SkeletonTemplate out = template_from_sequence(posed(g, 5, 1.0), g);
  EXPECT_TRUE(out.normalized);
  EXPECT_LT((out.positions - g.positions).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(TemplateFromSequence, UniformScaleDoublesBones) {
  const SkeletonTemplate& g = builtin_skeleton17();
  const SkeletonTemplate out = template_from_sequence(posed(g, 4, 2.0), g);
  const Eigen::VectorXd a = bone_lengths(g), b = bone_lengths(out);
  for (int i = 0; i < a.size(); ++i) EXPECT_NEAR(b(i), 2.0 * a(i), 1e-9 * a(i));
}

TEST(TemplateFromSequence, MedianIgnoresOutlierFrame) {
  const auto topo = chain_topology(3);
  JointPositions gp(3, 3);
  gp << 0, 0, 0, 0, 0, 1, 0, 0, 2;
  const SkeletonTemplate generic(topo, gp, true);
  MotionSequence seq(topo, 3, 30.0);
  const double len[3] = {0.9, 1.0, 5.0};
  for (int f = 0; f < 3; ++f) {
    seq.set_point(1, f, Vec3(0, 0, len[f]));
    seq.set_point(2, f, Vec3(0, 0, len[f] + 0.5));
  }
  const SkeletonTemplate out = template_from_sequence(seq, generic);
  const Eigen::VectorXd L = bone_lengths(out);
  EXPECT_NEAR(L(0), 1.0, 1e-12);
  EXPECT_NEAR(L(1), 0.5, 1e-12);
}

TEST(TemplateFromSequence, EvenLengthMedianAndDegenerateBone) {
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  const auto topo = chain_topology(2);
  JointPositions gp(2, 3);
  gp << 0, 0, 0, 1, 0, 0;
  MotionSequence seq(topo, 2, 30.0);  // all joints at the origin
  EXPECT_THROW(template_from_sequence(seq, SkeletonTemplate(topo, gp, true)), DataError);
}

TEST(TemplateFromSequence, LengthsEqualTemporalMedians) {
  const SkeletonTemplate& g = builtin_skeleton23();
  const MotionSequence seq = generate_synthetic(g, {MotionKind::kComposite, {1.1, 0.1}, 1.0, 30.0, 5});
  MotionSequence stretched = seq;
  Rng rng(9);
  for (double& v : stretched.data()) v += rng.uniform(-0.01, 0.01);
  const SkeletonTemplate out = template_from_sequence(stretched, g);
  const Eigen::MatrixXd L = bone_lengths(stretched);
  const Eigen::VectorXd T = bone_lengths(out);
  for (int b = 0; b < L.rows(); ++b) {
    std::vector<double> series(L.cols());
    for (int f = 0; f < L.cols(); ++f) series[f] = L(b, f);
    std::sort(series.begin(), series.end());
    const std::size_t n = series.size();
    const double m = n % 2 ? series[n / 2] : 0.5 * (series[n / 2 - 1] + series[n / 2]);
    EXPECT_NEAR(T(b), m, 1e-9 * m);
  }
}

TEST(SubsampleJoints, NoDropIsIdentity) {
  const SkeletonTemplate& t = builtin_skeleton23();
  const MotionSequence seq = random_motion(t.topology, 3, 1);
  const SubsampledMotion s = subsample_joints(seq, t, 42, 0.0, 0.0);
  EXPECT_TRUE(s.subset.is_identity(t.joint_count()));
  EXPECT_TRUE(std::equal(seq.data().begin(), seq.data().end(), s.motion.data().begin(), s.motion.data().end()));
  EXPECT_EQ(s.skeleton.positions, t.positions);
}

TEST(SubsampleJoints, DeterministicForSeed) {
  const SkeletonTemplate& t = builtin_skeleton23();
  const MotionSequence seq = random_motion(t.topology, 2, 1);
  const auto a = subsample_joints(seq, t, 7, 0.1, 0.5);
  const auto b = subsample_joints(seq, t, 7, 0.1, 0.5);
  EXPECT_EQ(a.subset.kept, b.subset.kept);
  EXPECT_EQ(a.subset.remapped_parents, b.subset.remapped_parents);
}

TEST(SubsampleJoints, KeptValuesBitwiseAndParentsNearestKeptAncestor) {
  const auto topo = random_tree_topology(20, 5);
  const MotionSequence seq = random_motion(topo, 3, 2);
  const SkeletonTemplate t = test::random_template(topo, 3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = subsample_joints(seq, t, seed, 0.3, 0.6);
    const auto& kept = s.subset.kept;
    ASSERT_TRUE(std::is_sorted(kept.begin(), kept.end()));
    ASSERT_GE(kept.size(), 2u);
    ASSERT_TRUE(std::binary_search(kept.begin(), kept.end(), topo.root()));
    for (std::size_t k = 0; k < kept.size(); ++k) {
      for (int a = 0; a < 3; ++a)
        for (int f = 0; f < 3; ++f) ASSERT_EQ(s.motion.at(static_cast<int>(k), a, f), seq.at(kept[k], a, f));
      ASSERT_EQ(s.skeleton.positions.row(k), t.positions.row(kept[k]));
      int anc = topo.parent(kept[k]);
      while (anc >= 0 && !std::binary_search(kept.begin(), kept.end(), anc)) anc = topo.parent(anc);
      const int expect = anc < 0 ? -1 : static_cast<int>(std::lower_bound(kept.begin(), kept.end(), anc) - kept.begin());
      ASSERT_EQ(s.subset.remapped_parents[k], expect);
      ASSERT_EQ(s.motion.topology().parent(static_cast<int>(k)), expect);
    }
  }
}

TEST(SubsampleJoints, MonteCarloDropRates) {
  // 20 joints; the builtin major flags are replaced by an explicit pattern.
  std::vector<std::string> names;
  std::vector<int> parents;
  std::vector<bool> major;
  for (int j = 0; j < 20; ++j) {
    names.push_back("q" + std::to_string(j));
    parents.push_back(j - 1);
    major.push_back(j % 4 == 1);
  }
  Landmarks lm;
  lm.pelvis = 0;
  const SkeletonTopology topo("mc20", names, parents, major, lm);
  std::vector<int> dropped(20, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const JointSubset s = draw_joint_subset(topo, derive_seed(99, {static_cast<std::uint64_t>(i)}), 0.1, 0.5);
    std::vector<bool> in(20, false);
    for (int k : s.kept) in[k] = true;
    for (int j = 0; j < 20; ++j) dropped[j] += !in[j];
  }
  EXPECT_EQ(dropped[0], 0);
  for (int j = 1; j < 20; ++j) {
    const double rate = static_cast<double>(dropped[j]) / n;
    EXPECT_NEAR(rate, major[j] ? 0.1 : 0.5, 0.02) << names[j];
  }
}

TEST(SubsampleJoints, RetriesUntilTwoJointsSurvive) {
  const auto topo = chain_topology(2);
  EXPECT_THROW(draw_joint_subset(topo, 1, 1.0, 1.0), DataError);
  const auto s = draw_joint_subset(chain_topology(6), 1, 0.9, 0.9);
  EXPECT_GE(s.kept.size(), 2u);
}

}  // namespace
}  // namespace humot
