#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "amp/error.hpp"
#include "amp/mlp.hpp"
#include "selfcheck/selfcheck.hpp"

namespace amp {
namespace {

Eigen::VectorXd random_vector(Rng& rng, int n, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(rng, -scale, scale);
  return v;
}

Mlp random_net(const MlpSpec& spec, Rng& rng) {
  Mlp net(spec, rng);
  for (auto& b : net.params().biases) b = random_vector(rng, static_cast<int>(b.size()), 0.3);
  return net;
}

// Plain loops, independent of the Eigen expression path in the library.
Eigen::VectorXd oracle_forward(const Mlp& net, const Eigen::VectorXd& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  const MlpParams& p = net.params();
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    std::vector<double> z(p.weights[l].rows());
    for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i) {
      double s = p.biases[l][i];
      for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j) s += p.weights[l](i, j) * a[j];
      z[i] = (l + 1 < p.weights.size()) ? std::max(0.0, s) : s;
    }
    a = z;
  }
  return Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
}

Eigen::VectorXd away_from_kinks(const Mlp& net, Rng& rng, int dim, double margin) {
  Eigen::VectorXd x = random_vector(rng, dim);
  while (selfcheck::kink_margin(net, x) < margin) x = random_vector(rng, dim);
  return x;
}

TEST(MlpForward, ZeroWeightsGiveBias) {
  MlpSpec spec{3, {4}, 2};
  MlpParams p = MlpParams::zeros(spec);
  p.biases[1] << 0.7, -1.2;
  const Mlp net(spec, p);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(net.forward(random_vector(rng, 3)), p.biases[1]);
}

TEST(MlpForward, OneByOneLinear) {
  MlpSpec spec{1, {}, 1};
  MlpParams p = MlpParams::zeros(spec);
  p.weights[0](0, 0) = 2.5;
  p.biases[0][0] = -0.5;
  const Mlp net(spec, p);
  EXPECT_DOUBLE_EQ(net.forward_scalar(Eigen::VectorXd::Constant(1, 3.0)), 2.5 * 3.0 - 0.5);
}

TEST(MlpForward, MatchesLoopOracle) {
  Rng rng(2);
  const Mlp net = random_net({6, {16, 9}, 3}, rng);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd x = random_vector(rng, 6, 2.0);
    EXPECT_LT((net.forward(x) - oracle_forward(net, x)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MlpForward, BatchMatchesSingle) {
  Rng rng(3);
  const Mlp net = random_net({4, {8, 8}, 2}, rng);
  Eigen::MatrixXd x(4, 5);
  for (int c = 0; c < 5; ++c) x.col(c) = random_vector(rng, 4);
  const Eigen::MatrixXd y = net.forward_batch(x);
  for (int c = 0; c < 5; ++c) EXPECT_LT((y.col(c) - net.forward(x.col(c))).norm(), 1e-13);
}

TEST(MlpForward, DimensionMismatchThrows) {
  Rng rng(4);
  const Mlp net({3, {4}, 1}, rng);
  try {
    net.forward(Eigen::VectorXd::Zero(5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
  }
}

TEST(MlpForward, Deterministic) {
  Rng a(9);
  Rng b(9);
  const Mlp n1({5, {7}, 2}, a);
  const Mlp n2({5, {7}, 2}, b);
  EXPECT_EQ(n1.params().flatten(), n2.params().flatten());
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -1, 1);
  EXPECT_EQ(n1.forward(x), n1.forward(x));
}

TEST(MlpInit, GlorotUniformBoundsAndScaledOutput) {
  Rng rng(5);
  const Mlp net({20, {30}, 4}, rng, 0.01);
  const double b0 = std::sqrt(6.0 / 50.0);
  const double b1 = std::sqrt(6.0 / 34.0) * 0.01;
  EXPECT_LE(net.params().weights[0].cwiseAbs().maxCoeff(), b0);
  EXPECT_LE(net.params().weights[1].cwiseAbs().maxCoeff(), b1);
  EXPECT_GT(net.params().weights[0].cwiseAbs().maxCoeff(), 0.5 * b0);
  EXPECT_EQ(net.params().biases[0], Eigen::VectorXd::Zero(30));
}

TEST(MlpBackward, LinearNetAtMinimumHasZeroGradient) {
  // Squared loss 0.5 (y - t)^2 at y = t.
  MlpSpec spec{2, {}, 1};
  MlpParams p = MlpParams::zeros(spec);
  p.weights[0] << 1.0, -2.0;
  const Mlp net(spec, p);
  Eigen::VectorXd x(2);
  x << 0.3, 0.4;
  const double target = net.forward_scalar(x);
  const Eigen::VectorXd dy = Eigen::VectorXd::Constant(1, net.forward_scalar(x) - target);
  EXPECT_EQ(backward_single(net, x, dy).squared_norm(), 0.0);
}

TEST(MlpBackward, FiniteDifferenceEveryParameter) {
  Rng rng(6);
  const Mlp net = random_net({5, {8, 6}, 3}, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = away_from_kinks(net, rng, 5, 1e-3);
    const Eigen::VectorXd c = random_vector(rng, 3);
    const Eigen::VectorXd analytic = backward_single(net, x, c).flatten();
    const Eigen::VectorXd theta = net.params().flatten();
    auto loss = [&](const Eigen::VectorXd& th) {
      Mlp probe = net;
      probe.params().unflatten(th);
      return c.dot(probe.forward(x));
    };
    Eigen::VectorXd numeric(theta.size());
    for (int i = 0; i < theta.size(); ++i) numeric[i] = selfcheck::central_difference(loss, theta, i, 1e-5);
    EXPECT_LT(selfcheck::relative_error(analytic, numeric), 1e-6);
  }
}

TEST(MlpBackward, InputGradientFromBackward) {
  Rng rng(7);
  const Mlp net = random_net({4, {10}, 2}, rng);
  const Eigen::VectorXd x = away_from_kinks(net, rng, 4, 1e-3);
  const Eigen::VectorXd c = random_vector(rng, 2);
  Eigen::VectorXd gx;
  backward_single(net, x, c, &gx);
  Eigen::VectorXd numeric(4);
  auto f = [&](const Eigen::VectorXd& xi) { return c.dot(net.forward(xi)); };
  for (int i = 0; i < 4; ++i) numeric[i] = selfcheck::central_difference(f, x, i, 1e-5);
  EXPECT_LT(selfcheck::relative_error(gx, numeric), 1e-6);
}

TEST(MlpBackward, AccumulatesIntoGrads) {
  Rng rng(8);
  const Mlp net = random_net({3, {5}, 1}, rng);
  const Eigen::VectorXd x = random_vector(rng, 3);
  const MlpParams once = backward_single(net, x, Eigen::VectorXd::Ones(1));
  MlpCache cache;
  net.forward_batch(x, cache);
  MlpParams twice = MlpParams::zeros(net.spec());
  net.backward(cache, Eigen::MatrixXd::Ones(1, 1), twice);
  net.backward(cache, Eigen::MatrixXd::Ones(1, 1), twice);
  EXPECT_LT((twice.flatten() - 2.0 * once.flatten()).norm(), 1e-14);
}

TEST(InputGradient, LinearNetIsWeights) {
  MlpSpec spec{3, {}, 1};
  MlpParams p = MlpParams::zeros(spec);
  p.weights[0] << 0.5, -1.0, 2.0;
  p.biases[0] << 4.0;
  const Mlp net(spec, p);
  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(net.input_gradient(random_vector(rng, 3, 10.0)), p.weights[0].row(0).transpose());
  }
}

TEST(InputGradient, FiniteDifferenceOnDiscriminatorShapedNet) {
  Rng rng(10);
  const Mlp net = random_net({24, {32, 16}, 1}, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = away_from_kinks(net, rng, 24, 1e-3);
    Eigen::VectorXd numeric(24);
    auto f = [&](const Eigen::VectorXd& xi) { return net.forward_scalar(xi); };
    for (int i = 0; i < 24; ++i) numeric[i] = selfcheck::central_difference(f, x, i, 1e-5);
    EXPECT_LT(selfcheck::relative_error(net.input_gradient(x), numeric), 1e-6);
  }
}

TEST(InputGradient, PiecewiseConstantAwayFromKinks) {
  Rng rng(11);
  const Mlp net = random_net({6, {12, 8}, 1}, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = away_from_kinks(net, rng, 6, 1e-3);
    const Eigen::VectorXd dx = random_vector(rng, 6, 1e-9);
    EXPECT_LT((net.input_gradient(x) - net.input_gradient(x + dx)).norm(), 1e-12);
  }
}

TEST(InputGradient, BatchMatchesSingle) {
  Rng rng(12);
  const Mlp net = random_net({5, {9}, 1}, rng);
  Eigen::MatrixXd x(5, 4);
  for (int c = 0; c < 4; ++c) x.col(c) = random_vector(rng, 5);
  const Eigen::MatrixXd g = net.input_gradient_batch(x);
  for (int c = 0; c < 4; ++c) EXPECT_LT((g.col(c) - net.input_gradient(x.col(c))).norm(), 1e-14);
}

TEST(InputGradNorm, LinearNetClosedForm) {
  MlpSpec spec{3, {}, 1};
  MlpParams p = MlpParams::zeros(spec);
  p.weights[0] << 0.5, -1.0, 2.0;
  p.biases[0] << 1.0;
  const Mlp net(spec, p);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(3, -1, 1);
  MlpParams grads = MlpParams::zeros(spec);
  EXPECT_DOUBLE_EQ(net.input_grad_norm_sq(x, &grads), 0.25 + 1.0 + 4.0);
  EXPECT_LT((grads.weights[0] - 2.0 * p.weights[0]).norm(), 1e-15);
  EXPECT_EQ(grads.biases[0][0], 0.0);
}

TEST(InputGradNorm, ZeroNetworkHasZeroPenaltyAndGradient) {
  MlpSpec spec{4, {6, 5}, 1};
  const Mlp net(spec, MlpParams::zeros(spec));
  MlpParams grads = MlpParams::zeros(spec);
  EXPECT_EQ(net.input_grad_norm_sq(Eigen::VectorXd::Ones(4), &grads), 0.0);
  EXPECT_EQ(grads.squared_norm(), 0.0);
}

TEST(InputGradNorm, FiniteDifferenceEveryParameter) {
  Rng rng(13);
  const Mlp net = random_net({5, {7, 6}, 1}, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = away_from_kinks(net, rng, 5, 1e-2);
    const Eigen::VectorXd analytic = grad_of_input_grad_norm(net, x).flatten();
    const Eigen::VectorXd theta = net.params().flatten();
    auto penalty = [&](const Eigen::VectorXd& th) {
      Mlp probe = net;
      probe.params().unflatten(th);
      return probe.input_gradient(x).squaredNorm();
    };
    Eigen::VectorXd numeric(theta.size());
    for (int i = 0; i < theta.size(); ++i) numeric[i] = selfcheck::central_difference(penalty, theta, i, 1e-6);
    EXPECT_LT(selfcheck::relative_error(analytic, numeric), 1e-5);
  }
}

TEST(Gaussian, LogProbAtMeanWithUnitSigma) {
  for (int d : {1, 3, 7}) {
    const Eigen::VectorXd mean = Eigen::VectorXd::LinSpaced(d, -1, 1);
    EXPECT_NEAR(gaussian_log_prob(mean, mean, Eigen::VectorXd::Ones(d)),
                -0.5 * d * std::log(2 * std::numbers::pi), 1e-14);
  }
}

TEST(Gaussian, LogProbMatchesDensityFormula) {
  Eigen::VectorXd a(2), m(2), s(2);
  a << 0.3, -0.1;
  m << 0.0, 0.2;
  s << 0.5, 2.0;
  double expected = 0.0;
  for (int i = 0; i < 2; ++i) {
    expected += std::log(std::exp(-0.5 * std::pow((a[i] - m[i]) / s[i], 2)) /
                         (s[i] * std::sqrt(2 * std::numbers::pi)));
  }
  EXPECT_NEAR(gaussian_log_prob(a, m, s), expected, 1e-14);
}

TEST(Gaussian, SmallSigmaSampleIsNearMean) {
  Rng rng(14);
  const Eigen::VectorXd mean = Eigen::VectorXd::LinSpaced(3, -1, 1);
  const GaussianSample s = gaussian_sample_logprob(mean, Eigen::VectorXd::Constant(3, 1e-9), rng);
  EXPECT_LT((s.action - mean).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_NEAR(s.log_prob, gaussian_log_prob(s.action, mean, Eigen::VectorXd::Constant(3, 1e-9)), 1e-6);
}

TEST(Gaussian, MonteCarloMomentsWithinThreeStandardErrors) {
  Rng rng(15);
  Eigen::VectorXd mean(2), sigma(2);
  mean << 0.4, -1.0;
  sigma << 0.3, 2.0;
  const int n = 100000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd a = gaussian_sample_logprob(mean, sigma, rng).action;
    sum += a;
    sum_sq += a.cwiseAbs2();
  }
  for (int k = 0; k < 2; ++k) {
    const double m = sum[k] / n;
    const double sd = std::sqrt(sum_sq[k] / n - m * m);
    EXPECT_LT(std::abs(m - mean[k]), 3 * sigma[k] / std::sqrt(n));
    // Standard error of the sample std is about sigma / sqrt(2n).
    EXPECT_LT(std::abs(sd - sigma[k]), 3 * sigma[k] / std::sqrt(2.0 * n));
  }
}

TEST(Gaussian, SamplingDeterministicUnderSeed) {
  Rng a(16);
  Rng b(16);
  const Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd sigma = Eigen::VectorXd::Ones(3);
  EXPECT_EQ(gaussian_sample_logprob(mean, sigma, a).action, gaussian_sample_logprob(mean, sigma, b).action);
}

TEST(Sgd, ZeroMomentumIsVanillaStep) {
  MlpSpec spec{2, {}, 1};
  MlpParams p = MlpParams::zeros(spec);
  p.weights[0] << 1.0, 2.0;
  MlpParams g = MlpParams::zeros(spec);
  g.weights[0] << 0.5, -0.5;
  g.biases[0] << 1.0;
  SgdMomentum opt(spec, 0.1, 0.0);
  ASSERT_TRUE(opt.step(p, g));
  EXPECT_DOUBLE_EQ(p.weights[0](0, 0), 0.95);
  EXPECT_DOUBLE_EQ(p.weights[0](0, 1), 2.05);
  EXPECT_DOUBLE_EQ(p.biases[0][0], -0.1);
}

TEST(Sgd, TwoMomentumStepsWithConstantGradient) {
  MlpSpec spec{1, {}, 1};
  MlpParams p = MlpParams::zeros(spec);
  MlpParams g = MlpParams::zeros(spec);
  g.weights[0](0, 0) = 2.0;
  SgdMomentum opt(spec, 0.01, 0.9);
  EXPECT_EQ(opt.velocity().squared_norm(), 0.0);
  opt.step(p, g);
  opt.step(p, g);
  EXPECT_NEAR(p.weights[0](0, 0), -0.01 * 2.0 * (1.0 + 1.9), 1e-15);
}

TEST(Sgd, NonFiniteGradientRejected) {
  MlpSpec spec{1, {}, 1};
  MlpParams p = MlpParams::zeros(spec);
  MlpParams g = MlpParams::zeros(spec);
  g.weights[0](0, 0) = std::numeric_limits<double>::infinity();
  SgdMomentum opt(spec, 0.1, 0.9);
  EXPECT_FALSE(opt.step(p, g));
  EXPECT_EQ(opt.rejected_steps(), 1);
  EXPECT_EQ(p.weights[0](0, 0), 0.0);
  EXPECT_EQ(opt.velocity().squared_norm(), 0.0);
}

TEST(Sgd, QuadraticBowlConverges) {
  // f(theta) = 0.5 sum_i c_i (theta_i - t_i)^2 over every parameter.
  MlpSpec spec{3, {}, 2};
  MlpParams p = MlpParams::zeros(spec);
  Rng rng(17);
  const int n = static_cast<int>(p.size());
  Eigen::VectorXd target(n), curvature(n);
  for (int i = 0; i < n; ++i) {
    target[i] = uniform(rng, -2, 2);
    curvature[i] = uniform(rng, 0.5, 4.0);
  }
  SgdMomentum opt(spec, 0.05, 0.9);
  for (int step = 0; step < 1000; ++step) {
    MlpParams g = p;
    g.unflatten(curvature.cwiseProduct(p.flatten() - target));
    opt.step(p, g);
  }
  EXPECT_LT((p.flatten() - target).norm(), 1e-8);
}

TEST(Policy, SigmaIsFixedAndLogProbConsistent) {
  Rng rng(18);
  GaussianPolicy pi(Mlp({4, {8}, 2}, rng), Eigen::VectorXd::Constant(2, 0.2));
  const Eigen::VectorXd obs = Eigen::VectorXd::LinSpaced(4, -1, 1);
  const GaussianSample s = pi.sample(obs, rng);
  EXPECT_NEAR(s.log_prob, pi.log_prob(obs, s.action), 1e-12);
  EXPECT_NEAR(s.log_prob, gaussian_log_prob(s.action, pi.mean(obs), pi.sigma()), 1e-12);
}

TEST(GradientSuite, AllChecksPass) {
  for (const auto& r : selfcheck::check_grads(3, 30)) EXPECT_TRUE(r.pass) << r.name << ": " << r.value;
}

}  // namespace
}  // namespace amp
