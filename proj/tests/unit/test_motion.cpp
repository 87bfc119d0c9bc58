#include <cmath>
#include <numbers>
#include <fstream>
#include <set>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "amp/error.hpp"
#include "amp/generate.hpp"
#include "amp/motion.hpp"
#include "amp/observation.hpp"
#include "amp/rotation.hpp"
#include "amp/sim.hpp"
#include "test_util.hpp"

namespace amp {
namespace {

constexpr double kPi = std::numbers::pi;

// Rodrigues rotation of v about unit axis k by angle theta.
Eigen::Vector3d rodrigues(const Eigen::Vector3d& v, const Eigen::Vector3d& k, double theta) {
  return v * std::cos(theta) + k.cross(v) * std::sin(theta) + k * k.dot(v) * (1.0 - std::cos(theta));
}

TEST(ExpMap, ZeroVectorIsIdentity) {
  const AxisAngle r = exp_map_to_rotation(Eigen::Vector3d::Zero());
  EXPECT_EQ(r.angle, 0.0);
  EXPECT_EQ(r.axis, Eigen::Vector3d::Zero());
  EXPECT_TRUE(rotation_matrix(r).isApprox(Eigen::Matrix3d::Identity(), 0.0));
}

TEST(ExpMap, BelowThresholdIsIdentity) {
  const AxisAngle r = exp_map_to_rotation(Eigen::Vector3d(1e-9, 0.0, 0.0));
  EXPECT_EQ(r.angle, 0.0);
  EXPECT_EQ(r.axis, Eigen::Vector3d::Zero());
}

TEST(ExpMap, UnitAxisScaling) {
  const AxisAngle r = exp_map_to_rotation(Eigen::Vector3d(kPi / 2, 0.0, 0.0));
  EXPECT_DOUBLE_EQ(r.angle, kPi / 2);
  EXPECT_TRUE(r.axis.isApprox(Eigen::Vector3d::UnitX()));
}

TEST(ExpMap, NonFiniteInputThrows) {
  try {
    exp_map_to_rotation(Eigen::Vector3d(std::nan(""), 0.0, 0.0));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
  }
}

TEST(ExpMap, MatchesRodriguesOnBasisVectors) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::Vector3d q(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3));
    const Eigen::Matrix3d r = rotation_matrix(exp_map_to_rotation(q));
    const Eigen::Vector3d k = q.normalized();
    for (int b = 0; b < 3; ++b) {
      const Eigen::Vector3d e = Eigen::Vector3d::Unit(b);
      EXPECT_LT((r * e - rodrigues(e, k, q.norm())).norm(), 1e-10);
    }
  }
}

TEST(ExpMap, InverseRecoversVectorUpToAxisSign) {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::Vector3d axis(standard_normal(rng), standard_normal(rng), standard_normal(rng));
    axis.normalize();
    const double theta = uniform(rng, 1e-3, kPi - 1e-3);
    const Eigen::Vector3d q = theta * axis;
    const Eigen::Vector3d back = rotation_matrix_to_exp_map(rotation_matrix(exp_map_to_rotation(q)));
    EXPECT_LT(std::min((back - q).norm(), (back + q).norm()), 1e-9) << "theta " << theta;
  }
}

TEST(NormalTangent, IdentityAndHalfTurn) {
  const NormalTangent2 id = rotation_to_normal_tangent(0.0);
  EXPECT_EQ(id.normal, Eigen::Vector2d(1, 0));
  EXPECT_EQ(id.tangent, Eigen::Vector2d(0, 1));
  const NormalTangent2 half = rotation_to_normal_tangent(kPi);
  EXPECT_NEAR(half.normal.x(), -1.0, 1e-15);
  EXPECT_NEAR(half.normal.y(), 0.0, 1e-15);
  EXPECT_NEAR(half.tangent.x(), 0.0, 1e-15);
  EXPECT_NEAR(half.tangent.y(), -1.0, 1e-15);
}

TEST(NormalTangent, PeriodicInTwoPi) {
  for (double a : {-2.0, 0.3, 1.7, 3.0}) {
    const NormalTangent2 x = rotation_to_normal_tangent(a);
    const NormalTangent2 y = rotation_to_normal_tangent(a + 2 * kPi);
    EXPECT_LT((x.normal - y.normal).norm(), 1e-14);
    EXPECT_LT((x.tangent - y.tangent).norm(), 1e-14);
  }
}

TEST(NormalTangent, AlwaysOrthonormal) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const NormalTangent2 e = rotation_to_normal_tangent(uniform(rng, -100, 100));
    EXPECT_NEAR(e.normal.norm(), 1.0, 1e-12);
    EXPECT_NEAR(e.tangent.norm(), 1.0, 1e-12);
    EXPECT_NEAR(e.normal.dot(e.tangent), 0.0, 1e-12);
  }
}

TEST(NormalTangent, ThreeDimensionalColumnsOrthonormal) {
  const Eigen::Matrix3d r = rotation_matrix(exp_map_to_rotation(Eigen::Vector3d(0.3, -1.1, 0.7)));
  const Eigen::Matrix<double, 6, 1> nt = rotation_to_normal_tangent(r);
  EXPECT_NEAR(nt.head<3>().norm(), 1.0, 1e-12);
  EXPECT_NEAR(nt.tail<3>().norm(), 1.0, 1e-12);
  EXPECT_NEAR(nt.head<3>().dot(nt.tail<3>()), 0.0, 1e-12);
}

TEST(WrapAngle, HalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi + 0.1), -kPi + 0.1, 1e-12);
  EXPECT_NEAR(wrap_angle(-0.2), -0.2, 0.0);
}

TEST(FiniteDifference, ConstantPoseHasZeroVelocity) {
  const MotionClip c = finite_difference_velocities(test::joint_clip({0.4, 0.4, 0.4, 0.4}));
  for (const Pose& p : c.frames) {
    EXPECT_TRUE(p.has_velocities);
    EXPECT_EQ(p.joint_velocities[0], 0.0);
    EXPECT_EQ(p.root_linear_velocity, Eigen::Vector2d::Zero());
  }
}

TEST(FiniteDifference, LinearRamp) {
  std::vector<double> angles;
  for (int t = 0; t < 6; ++t) angles.push_back(0.1 * t);
  const MotionClip c = finite_difference_velocities(test::joint_clip(angles));
  for (const Pose& p : c.frames) EXPECT_NEAR(p.joint_velocities[0], 3.0, 1e-12);
}

TEST(FiniteDifference, WrapsAcrossPi) {
  // Enumerated pairs straddling the branch cut: the velocity must be the
  // shortest signed difference times the rate.
  for (double a = 2.9; a < kPi; a += 0.05) {
    for (double b = -kPi + 0.01; b < -2.9; b += 0.05) {
      const MotionClip c = finite_difference_velocities(test::joint_clip({a, b}));
      const double expected = (b + 2 * kPi - a) * 30.0;
      EXPECT_NEAR(c.frames[0].joint_velocities[0], expected, 1e-9);
      EXPECT_LT(std::abs(c.frames[0].joint_velocities[0]), 30.0 * 0.6);
    }
  }
  const MotionClip c = finite_difference_velocities(test::joint_clip({3.1, -3.1}));
  EXPECT_NEAR(c.frames[0].joint_velocities[0], (2 * kPi - 6.2) * 30.0, 1e-9);
}

TEST(FiniteDifference, LastFrameRepeatsPrevious) {
  const MotionClip c = finite_difference_velocities(test::joint_clip({0.0, 0.1, 0.5}));
  EXPECT_NEAR(c.frames[2].joint_velocities[0], c.frames[1].joint_velocities[0], 0.0);
}

TEST(FiniteDifference, LoopableClipWrapsToFrameZero) {
  // One period of a sinusoid sampled without the repeated endpoint: the last
  // frame's velocity must equal the continuation into the next period.
  const int n = 40;
  std::vector<double> angles;
  for (int t = 0; t < n; ++t) angles.push_back(0.7 * std::sin(2 * kPi * t / n));
  const MotionClip c = finite_difference_velocities(test::joint_clip(angles, 30.0, 1.0, true));
  const double continuation = (0.7 * std::sin(2 * kPi * n / n) - angles.back()) * 30.0;
  EXPECT_NEAR(c.frames[n - 1].joint_velocities[0], continuation, 1e-12);
}

TEST(ClipFile, RoundTripIsBitExact) {
  const CharacterModel walker = CharacterModel::builtin("walker5");
  for (const std::string kind : {"oscillate", "gait"}) {
    const MotionClip clip = generate_clip(kind, walker, {});
    const auto dir = test::scratch_dir("clip_roundtrip");
    clip.save((dir / "c.json").string());
    const MotionClip back = MotionClip::load((dir / "c.json").string());
    ASSERT_EQ(back.num_frames(), clip.num_frames());
    EXPECT_EQ(back.frame_rate, clip.frame_rate);
    EXPECT_EQ(back.loopable, clip.loopable);
    EXPECT_EQ(back.name, clip.name);
    EXPECT_EQ(back.joint_names, clip.joint_names);
    for (int i = 0; i < clip.num_frames(); ++i) {
      EXPECT_EQ(back.frames[i].root_position, clip.frames[i].root_position);
      EXPECT_EQ(back.frames[i].root_rotation, clip.frames[i].root_rotation);
      EXPECT_EQ(back.frames[i].joint_rotations, clip.frames[i].joint_rotations);
    }
  }
}

TEST(ClipFile, ParseErrorNamesFileAndField) {
  try {
    MotionClip::from_json(R"({"name": "x", "frame_rate": "fast", "frames": []})", "bad.json");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("frame_rate"), std::string::npos);
  }
}

TEST(Dataset, TwoFrameClip) {
  const CharacterModel m = test::two_link_chain();
  MotionDataset d(m, {test::joint_clip({0.0, 0.1})});
  EXPECT_EQ(d.num_transitions(), 1);
  EXPECT_NEAR(d.total_duration(), 1.0 / 30.0, 1e-15);
}

TEST(Dataset, EmptyClipListThrows) {
  const CharacterModel m = test::two_link_chain();
  EXPECT_THROW(MotionDataset(m, {}), Error);
  try {
    MotionDataset::load(m, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmpty);
  }
}

TEST(Dataset, JointCountMismatchThrows) {
  const CharacterModel walker = CharacterModel::builtin("walker5");
  const auto dir = test::scratch_dir("dataset_mismatch");
  test::joint_clip({0.0, 0.1, 0.2}).save((dir / "one_joint.json").string());
  try {
    MotionDataset::load(walker, {(dir / "one_joint.json").string()});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
  }
}

TEST(Dataset, TotalDurationIsSumOfClips) {
  const CharacterModel walker = CharacterModel::builtin("walker5");
  ClipParams a;
  ClipParams b;
  b.duration = 3.0;
  MotionDataset d(walker, {generate_clip("gait", walker, a), generate_clip("oscillate", walker, b)});
  EXPECT_NEAR(d.total_duration(), 59.0 / 30.0 + 89.0 / 30.0, 1e-12);
}

TEST(Dataset, ManifestWeightsAndRelativePaths) {
  const CharacterModel m = test::two_link_chain();
  const auto dir = test::scratch_dir("manifest");
  test::joint_clip({0.0, 0.1, 0.2}).save((dir / "a.json").string());
  test::joint_clip({0.0, -0.1, -0.2}).save((dir / "b.json").string());
  {
    std::ofstream out(dir / "set.json");
    out << R"(["a.json", {"path": "b.json", "weight": 3.0}])";
  }
  const auto entries = load_manifest((dir / "set.json").string());
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[1].weight, 3.0);
  const MotionDataset d = MotionDataset::load(m, {(dir / "set.json").string()});
  EXPECT_EQ(d.clips().size(), 2u);
  Rng rng(5);
  int second = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) second += d.sample_transition_index(rng).first == 1;
  EXPECT_NEAR(second / static_cast<double>(n), 0.75, 0.01);
}

TEST(Dataset, SingleTransitionReturnedEveryTime) {
  const CharacterModel m = test::two_link_chain();
  MotionDataset d(m, {test::joint_clip({0.0, 0.3})});
  Rng rng(1);
  const auto batch = d.sample_transitions(50, rng, false);
  for (const auto& [a, b] : batch) {
    EXPECT_EQ(a, d.observation(0, 0));
    EXPECT_EQ(b, d.observation(0, 1));
  }
}

TEST(Dataset, ClipsWeightedByTransitionCount) {
  const CharacterModel m = test::two_link_chain();
  std::vector<double> short_clip(11, 0.0);
  std::vector<double> long_clip(31, 0.5);
  MotionDataset d(m, {test::joint_clip(short_clip), test::joint_clip(long_clip)});
  Rng rng(21);
  int second = 0;
  for (int i = 0; i < 4000; ++i) second += d.sample_transition_index(rng).first == 1;
  EXPECT_NEAR(second / 4000.0, 0.75, 0.03);
}

TEST(Dataset, TransitionSamplingIsUniform) {
  const CharacterModel m = test::two_link_chain();
  std::vector<double> a(21);
  std::vector<double> b(45);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.01 * i;
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = -0.01 * i;
  MotionDataset d(m, {test::joint_clip(a), test::joint_clip(b)});
  ASSERT_EQ(d.num_transitions(), 64);
  std::vector<int> counts(64, 0);
  Rng rng(99);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto [c, t] = d.sample_transition_index(rng);
    ++counts[c == 0 ? t : 20 + t];
  }
  const double expected = draws / 64.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, test::chi_square_critical_001(63));
}

TEST(Dataset, SamplingIsDeterministic) {
  const CharacterModel walker = CharacterModel::builtin("walker5");
  MotionDataset d(walker, {generate_clip("gait", walker, {})});
  Rng r1(42);
  Rng r2(42);
  const auto a = d.sample_transitions(64, r1);
  const auto b = d.sample_transitions(64, r2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_EQ(a[i].second, b[i].second);
  }
}

TEST(Dataset, NormalizedStatisticsAreStandard) {
  const CharacterModel walker = CharacterModel::builtin("walker5");
  MotionDataset d(walker, {generate_clip("gait", walker, {})});
  // Statistics are taken over both ends of every transition.
  std::vector<Eigen::VectorXd> normalized;
  for (int t = 0; t < d.num_transitions(); ++t) {
    normalized.push_back(d.stats().normalize(d.observation(0, t)));
    normalized.push_back(d.stats().normalize(d.observation(0, t + 1)));
  }
  const int dim = d.obs_dim();
  for (int k = 0; k < dim; ++k) {
    double mean = 0.0;
    for (const auto& x : normalized) mean += x[k];
    mean /= normalized.size();
    EXPECT_LT(std::abs(mean), 1e-6) << "feature " << k;
    if (d.stats().std[k] > FeatureStats::kStdFloor) {
      double var = 0.0;
      for (const auto& x : normalized) var += (x[k] - mean) * (x[k] - mean);
      EXPECT_NEAR(std::sqrt(var / normalized.size()), 1.0, 1e-9) << "feature " << k;
    }
    EXPECT_GE(d.stats().std[k], FeatureStats::kStdFloor);
  }
}

TEST(ReferenceInit, TwoFrameClipMatchesAFrame) {
  const CharacterModel m = test::two_link_chain();
  MotionDataset d(m, {test::joint_clip({0.2, 0.9})});
  Rng rng(8);
  std::set<double> seen;
  for (int i = 0; i < 50; ++i) {
    const SimState s = d.sample_reference_state(rng);
    EXPECT_TRUE(s.q[3] == 0.2 || s.q[3] == 0.9);
    seen.insert(s.q[3]);
  }
  EXPECT_EQ(seen.size(), 2u);
}

TEST(ReferenceInit, FramesDrawnUniformly) {
  const CharacterModel m = test::two_link_chain();
  std::vector<double> angles(100);
  for (int i = 0; i < 100; ++i) angles[i] = 0.01 * i;
  MotionDataset d(m, {test::joint_clip(angles)});
  std::vector<int> counts(100, 0);
  Rng rng(13);
  for (int i = 0; i < 10000; ++i) {
    const SimState s = d.sample_reference_state(rng);
    ++counts[static_cast<int>(std::lround(s.q[3] * 100))];
  }
  for (int c : counts) EXPECT_NEAR(c / 10000.0, 0.01, 0.005);
}

TEST(ReferenceInit, StatesCarryClipVelocities) {
  const CharacterModel m = test::two_link_chain();
  MotionDataset d(m, {test::joint_clip({0.0, 0.1, 0.3})});
  const SimState s = d.reference_state(0, 1);
  EXPECT_NEAR(s.qdot[3], 6.0, 1e-12);
}

TEST(ReferenceInit, NoGroundPenetration) {
  const CharacterModel walker = CharacterModel::builtin("walker5");
  MotionClip c = generate_clip("gait", walker, {});
  for (Pose& p : c.frames) p.root_position.y() -= 0.3;  // sunk into the floor
  MotionDataset d(walker, {c});
  Rng rng(2);
  for (int i = 0; i < 100; ++i) EXPECT_GE(min_contact_height(d.sample_reference_state(rng), walker), -1e-12);
}

TEST(ObservationMap, TranslationInvariant) {
  const CharacterModel walker = CharacterModel::builtin("walker5");
  const ObservationMap phi(walker);
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    SimState s = SimState::zero(walker);
    for (int i = 0; i < s.q.size(); ++i) {
      s.q[i] = uniform(rng, -1, 1);
      s.qdot[i] = uniform(rng, -2, 2);
    }
    SimState moved = s;
    moved.q[0] += 10.0;
    moved.q[1] -= 3.0;
    EXPECT_LT((phi(s) - phi(moved)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ObservationMap, TranslatedTenMetresIsIdentical) {
  const CharacterModel walker = CharacterModel::builtin("walker5");
  const ObservationMap phi(walker);
  SimState s = SimState::zero(walker);
  s.q << 0.0, 1.0, 0.0, 0.3, -0.6, -0.2, -0.1;
  SimState moved = s;
  moved.q[0] = 10.0;
  EXPECT_LT((phi(s) - phi(moved)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ObservationMap, StandingPoseHasZeroVelocityBlock) {
  const CharacterModel walker = CharacterModel::builtin("walker5");
  const ObservationMap phi(walker);
  SimState s = SimState::zero(walker);
  s.q[1] = 0.92;
  const Eigen::VectorXd x = phi(s);
  EXPECT_EQ(x.head<3>(), Eigen::Vector3d::Zero());
  EXPECT_EQ(x.segment(3 + 4 * walker.num_joints(), walker.num_joints()),
            Eigen::VectorXd::Zero(walker.num_joints()));
}

TEST(ObservationMap, HandComputedRotatedTwoLinkChain) {
  const CharacterModel m = test::two_link_chain();
  const ObservationMap phi(m);
  SimState s = SimState::zero(m);
  const double root_rot = 0.7;
  const double elbow = -0.4;
  s.q << 1.5, 0.8, root_rot, elbow;
  s.qdot << 0.3, -0.2, 0.5, 1.1;
  const Eigen::VectorXd x = phi(s);
  ASSERT_EQ(x.size(), 3 + 4 + 1 + 2);
  // Root features: the planar heading frame only translates.
  EXPECT_NEAR(x[0], 0.3, 1e-10);
  EXPECT_NEAR(x[1], -0.2, 1e-10);
  EXPECT_NEAR(x[2], 0.5, 1e-10);
  EXPECT_NEAR(x[3], std::cos(elbow), 1e-10);
  EXPECT_NEAR(x[4], std::sin(elbow), 1e-10);
  EXPECT_NEAR(x[5], -std::sin(elbow), 1e-10);
  EXPECT_NEAR(x[6], std::cos(elbow), 1e-10);
  EXPECT_NEAR(x[7], 1.1, 1e-10);
  const double c0 = std::cos(root_rot);
  const double s0 = std::sin(root_rot);
  const double c1 = std::cos(root_rot + elbow);
  const double s1 = std::sin(root_rot + elbow);
  EXPECT_NEAR(x[8], 0.4 * c0 + 0.5 * c1, 1e-10);
  EXPECT_NEAR(x[9], 0.4 * s0 + 0.5 * s1, 1e-10);
}

TEST(ObservationMap, NoVelocityOptionDropsExactlyTheVelocityBlock) {
  for (const std::string name : CharacterModel::builtin_names()) {
    const CharacterModel m = CharacterModel::builtin(name);
    const ObservationMap full(m);
    const ObservationMap reduced(m, ObsOptions{false});
    EXPECT_EQ(full.dim() - reduced.dim(), 3 + m.num_joints()) << name;
    EXPECT_EQ(full.velocity_block_size(), 3 + m.num_joints());
  }
}

TEST(PolicyFeatures, TranslationInvariantExceptHeight) {
  const CharacterModel walker = CharacterModel::builtin("walker5");
  SimState s = SimState::zero(walker);
  s.q << 0.0, 1.0, 0.1, 0.3, -0.6, -0.2, -0.1;
  s.qdot << 0.5, 0.1, -0.3, 1.0, 0.0, -1.0, 0.5;
  SimState moved = s;
  moved.q[0] += 7.0;
  EXPECT_LT((policy_state_features(s, walker) - policy_state_features(moved, walker)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(policy_state_features(s, walker).size(), policy_state_dim(walker));
}

}  // namespace
}  // namespace amp
