#include "selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "amp/error.hpp"
#include "amp/prior.hpp"
#include "amp/rl.hpp"
#include "amp/rng.hpp"
#include "amp/sim.hpp"

namespace amp::selfcheck {
namespace {

constexpr double kGradTolerance = 1e-5;
constexpr double kReturnTolerance = 1e-12;
constexpr double kDtwTolerance = 1e-12;
constexpr double kDiscTolerance = 0.05;
constexpr double kPendulumTolerance = 1e-9;
constexpr double kMomentumTolerance = 1e-8;
constexpr double kConvergenceTolerance = 1e-3;
constexpr double kEnergyTolerance = 1e-3;

Eigen::VectorXd random_vector(Rng& rng, int n, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * standard_normal(rng);
  return v;
}

// Random network with non-zero biases, so kinks are not all at the origin.
Mlp random_net(Rng& rng, const MlpSpec& spec) {
  Mlp net(spec, rng);
  for (auto& b : net.params().biases) b = random_vector(rng, static_cast<int>(b.size()), 0.3);
  return net;
}

CheckResult make(const std::string& suite, const std::string& name, double value, double tol,
                 std::string detail = {}) {
  return {suite, name, value < tol, value, tol, std::move(detail)};
}

}  // namespace

double central_difference(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                          int i, double h) {
  Eigen::VectorXd xp = x;
  Eigen::VectorXd xm = x;
  xp[i] += h;
  xm[i] -= h;
  return (f(xp) - f(xm)) / (2.0 * h);
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

double kink_margin(const Mlp& net, const Eigen::VectorXd& x) {
  MlpCache cache;
  net.forward_batch(x, cache);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < cache.pre.size(); ++l) margin = std::min(margin, cache.pre[l].cwiseAbs().minCoeff());
  return margin;
}

std::vector<double> brute_force_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                                    double bootstrap, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  auto value = [&](std::size_t t) { return t < n ? values[t] : bootstrap; };
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = t; k < n; ++k) {
      const double delta = rewards[k] + gamma * value(k + 1) - value(k);
      out[t] += std::pow(gamma * lambda, static_cast<double>(k - t)) * delta;
    }
  }
  return out;
}

std::vector<double> brute_force_lambda_returns(const std::vector<double>& rewards,
                                               const std::vector<double>& values, double bootstrap,
                                               double gamma, double lambda) {
  const std::size_t n = rewards.size();
  auto value = [&](std::size_t t) { return t < n ? values[t] : bootstrap; };
  auto n_step = [&](std::size_t t, std::size_t steps) {
    double g = 0.0;
    for (std::size_t k = 0; k < steps; ++k) g += std::pow(gamma, static_cast<double>(k)) * rewards[t + k];
    return g + std::pow(gamma, static_cast<double>(steps)) * value(t + steps);
  };
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t remaining = n - t;
    for (std::size_t s = 1; s < remaining; ++s) {
      out[t] += (1.0 - lambda) * std::pow(lambda, static_cast<double>(s - 1)) * n_step(t, s);
    }
    out[t] += std::pow(lambda, static_cast<double>(remaining - 1)) * n_step(t, remaining);
  }
  return out;
}

PathOptimum enumerate_dtw(const PoseSequence& a, const PoseSequence& b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  PathOptimum best;
  best.total_cost = std::numeric_limits<double>::infinity();
  int best_len = std::numeric_limits<int>::max();
  std::function<void(int, int, double, int)> walk = [&](int i, int j, double cost, int len) {
    cost += pose_error(a[i], b[j]);
    ++len;
    if (i == n - 1 && j == m - 1) {
      ++best.paths;
      if (cost < best.total_cost || (cost == best.total_cost && len < best_len)) {
        best.total_cost = cost;
        best_len = len;
      }
      return;
    }
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, cost, len);
    if (i + 1 < n) walk(i + 1, j, cost, len);
    if (j + 1 < m) walk(i, j + 1, cost, len);
  };
  walk(0, 0, 0.0, 0);
  best.mean_error = best.total_cost / best_len;
  return best;
}

CharacterModel pendulum_model(double length, double mass) {
  CharacterModel m;
  m.name = "pendulum";
  Link pivot;
  pivot.name = "pivot";
  pivot.mass = 1.0;
  pivot.inertia = 1.0;
  Link bob;
  bob.name = "bob";
  bob.mass = mass;
  bob.inertia = 1e-14;  // a point mass up to rounding
  bob.length = length;
  bob.com = {0.0, -length};
  m.links = {pivot, bob};
  Joint j;
  j.name = "swing";
  j.parent = 0;
  j.child = 1;
  j.lower = -1e9;
  j.upper = 1e9;
  m.joints = {j};
  m.end_effectors.push_back({"bob", 1, {0.0, -length}});
  return m;
}

std::vector<CheckResult> check_grads(std::uint64_t seed, int points) {
  Rng rng = make_rng(seed, {0x67AD});
  constexpr double kH = 1e-6;
  constexpr double kMargin = 1e-2;
  double worst_backward = 0.0;
  double worst_input = 0.0;
  double worst_penalty = 0.0;
  int rejected = 0;
  for (int p = 0; p < points; ++p) {
    const MlpSpec vec_spec{5, {7, 6}, 3};
    const MlpSpec scalar_spec{5, {7, 6}, 1};
    Mlp vec_net = random_net(rng, vec_spec);
    Mlp net = random_net(rng, scalar_spec);
    Eigen::VectorXd x = random_vector(rng, 5);
    while (kink_margin(vec_net, x) < kMargin || kink_margin(net, x) < kMargin) {
      x = random_vector(rng, 5);
      ++rejected;
    }

    // Parameter gradient of c . f(x).
    const Eigen::VectorXd c = random_vector(rng, 3);
    const Eigen::VectorXd analytic = backward_single(vec_net, x, c).flatten();
    const Eigen::VectorXd theta = vec_net.params().flatten();
    auto loss = [&](const Eigen::VectorXd& th) {
      Mlp probe = vec_net;
      probe.params().unflatten(th);
      return c.dot(probe.forward(x));
    };
    Eigen::VectorXd numeric(theta.size());
    for (int i = 0; i < theta.size(); ++i) numeric[i] = central_difference(loss, theta, i, kH);
    worst_backward = std::max(worst_backward, relative_error(analytic, numeric));

    // Input gradient of the scalar net.
    auto scalar = [&](const Eigen::VectorXd& xi) { return net.forward_scalar(xi); };
    Eigen::VectorXd numeric_x(5);
    for (int i = 0; i < 5; ++i) numeric_x[i] = central_difference(scalar, x, i, kH);
    worst_input = std::max(worst_input, relative_error(net.input_gradient(x), numeric_x));

    // Parameter gradient of ||grad_x D(x)||^2.
    const Eigen::VectorXd pen_analytic = grad_of_input_grad_norm(net, x).flatten();
    const Eigen::VectorXd pen_theta = net.params().flatten();
    auto penalty = [&](const Eigen::VectorXd& th) {
      Mlp probe = net;
      probe.params().unflatten(th);
      return probe.input_gradient(x).squaredNorm();
    };
    Eigen::VectorXd pen_numeric(pen_theta.size());
    for (int i = 0; i < pen_theta.size(); ++i) pen_numeric[i] = central_difference(penalty, pen_theta, i, kH);
    worst_penalty = std::max(worst_penalty, relative_error(pen_analytic, pen_numeric));
  }
  const std::string detail = std::to_string(points) + " points, " + std::to_string(rejected) + " resampled near kinks";
  return {make("grads", "backward", worst_backward, kGradTolerance, detail),
          make("grads", "input_gradient", worst_input, kGradTolerance, detail),
          make("grads", "grad_of_input_grad_norm", worst_penalty, kGradTolerance, detail)};
}

std::vector<CheckResult> check_returns(std::uint64_t seed, int cases) {
  Rng rng = make_rng(seed, {0x6AE});
  double worst_gae = 0.0;
  double worst_td = 0.0;
  double worst_identity = 0.0;
  int timeouts = 0;
  for (int c = 0; c < cases; ++c) {
    const int length = 1 + c % 8;
    Trajectory traj;
    for (int t = 0; t < length; ++t) {
      traj.rewards.push_back(uniform(rng, -1.0, 1.0));
      traj.values.push_back(uniform(rng, -2.0, 2.0));
    }
    traj.final_value = uniform(rng, -2.0, 2.0);
    traj.end = (c / 8) % 2 == 0 ? EndKind::kTimeout : EndKind::kFailure;
    if (traj.end == EndKind::kTimeout) ++timeouts;
    const double gamma = uniform(rng, 0.5, 0.999);
    const double lambda = c % 10 == 0 ? 0.0 : (c % 10 == 1 ? 1.0 : uniform(rng, 0.0, 1.0));
    const double boot = traj.bootstrap();
    if (traj.end == EndKind::kFailure && boot != 0.0) worst_gae = std::numeric_limits<double>::infinity();

    const auto gae = gae_advantages(traj.rewards, traj.values, boot, gamma, lambda);
    const auto td = td_lambda_targets(traj.rewards, traj.values, boot, gamma, lambda);
    const auto gae_ref = brute_force_gae(traj.rewards, traj.values, boot, gamma, lambda);
    const auto td_ref = brute_force_lambda_returns(traj.rewards, traj.values, boot, gamma, lambda);
    for (int t = 0; t < length; ++t) {
      worst_gae = std::max(worst_gae, std::abs(gae[t] - gae_ref[t]));
      worst_td = std::max(worst_td, std::abs(td[t] - td_ref[t]));
      worst_identity = std::max(worst_identity, std::abs(td_ref[t] - (gae_ref[t] + traj.values[t])));
    }
  }
  const std::string detail = std::to_string(cases) + " cases, " + std::to_string(timeouts) + " timeouts";
  return {make("gae", "gae_vs_double_sum", worst_gae, kReturnTolerance, detail),
          make("gae", "td_lambda_vs_nstep_average", worst_td, kReturnTolerance, detail),
          make("gae", "lambda_return_eq_adv_plus_value", worst_identity, kReturnTolerance, detail)};
}

std::vector<CheckResult> check_dtw(std::uint64_t seed, int pairs) {
  Rng rng = make_rng(seed, {0xD7});
  auto random_seq = [&](int len) {
    PoseSequence s(len);
    for (auto& f : s) {
      f.root = random_vector(rng, 2);
      for (int j = 0; j < 3; ++j) f.joints.push_back(random_vector(rng, 2));
    }
    return s;
  };
  double worst_total = 0.0;
  double worst_mean = 0.0;
  double worst_symmetry = 0.0;
  double worst_diagonal = 0.0;
  long long paths = 0;
  for (int p = 0; p < pairs; ++p) {
    const PoseSequence a = random_seq(1 + static_cast<int>(uniform_index(rng, 8)));
    const PoseSequence b = random_seq(1 + static_cast<int>(uniform_index(rng, 8)));
    const DtwResult dp = dtw_align(a, b);
    const PathOptimum ref = enumerate_dtw(a, b);
    paths += ref.paths;
    worst_total = std::max(worst_total, std::abs(dp.total_cost - ref.total_cost));
    worst_mean = std::max(worst_mean, std::abs(dp.mean_error - ref.mean_error));
    worst_symmetry = std::max(worst_symmetry, std::abs(dp.mean_error - dtw_align(b, a).mean_error));
    if (a.size() == b.size()) {
      double frame = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) frame += pose_error(a[i], b[i]);
      frame /= static_cast<double>(a.size());
      worst_diagonal = std::max(worst_diagonal, dp.mean_error - frame);
    }
  }
  // Identical and uniformly stretched sequences align at zero cost.
  const PoseSequence base = random_seq(8);
  PoseSequence stretched;
  for (const auto& f : base) {
    stretched.push_back(f);
    stretched.push_back(f);
  }
  const double identical = dtw_align(base, base).mean_error;
  const double stretch = dtw_align(base, stretched).mean_error;
  const std::string detail = std::to_string(pairs) + " pairs, " + std::to_string(paths) + " paths enumerated";
  return {make("dtw", "dp_total_vs_enumeration", worst_total, kDtwTolerance, detail),
          make("dtw", "dp_mean_vs_enumeration", worst_mean, kDtwTolerance, detail),
          make("dtw", "symmetry", worst_symmetry, kDtwTolerance),
          make("dtw", "not_above_frame_by_frame", std::max(0.0, worst_diagonal), kDtwTolerance),
          make("dtw", "identical_is_zero", identical, kDtwTolerance),
          make("dtw", "stretch_2x_is_zero", stretch, kDtwTolerance)};
}

std::vector<CheckResult> check_discriminator(std::uint64_t seed, int problems) {
  Rng rng = make_rng(seed, {0xD15C});
  double worst = 0.0;
  for (int p = 0; p < problems; ++p) {
    // Integer atom counts make the batch averages exact expectations.
    int count_m[4];
    int count_pi[4];
    int total_m = 0;
    int total_pi = 0;
    for (int i = 0; i < 4; ++i) {
      count_m[i] = 1 + static_cast<int>(uniform_index(rng, 12));
      count_pi[i] = 1 + static_cast<int>(uniform_index(rng, 12));
      total_m += count_m[i];
      total_pi += count_pi[i];
    }
    Eigen::MatrixXd real = Eigen::MatrixXd::Zero(4, total_m);
    Eigen::MatrixXd fake = Eigen::MatrixXd::Zero(4, total_pi);
    for (int i = 0, cm = 0, cp = 0; i < 4; ++i) {
      for (int k = 0; k < count_m[i]; ++k) real(i, cm++) = 1.0;
      for (int k = 0; k < count_pi[i]; ++k) fake(i, cp++) = 1.0;
    }
    const MlpSpec spec{4, {16}, 1};
    Mlp disc(spec, rng);
    SgdMomentum opt(spec, 0.02, 0.9);
    MlpParams grads = MlpParams::zeros(spec);
    for (int step = 0; step < 4000; ++step) {
      grads.set_zero();
      discriminator_objective(disc, real, fake, 0.0, &grads);
      opt.step(disc.params(), grads);
    }
    for (int i = 0; i < 4; ++i) {
      const double pm = static_cast<double>(count_m[i]) / total_m;
      const double pp = static_cast<double>(count_pi[i]) / total_pi;
      const Eigen::VectorXd e = Eigen::VectorXd::Unit(4, i);
      worst = std::max(worst, std::abs(disc.forward_scalar(e) - (pm - pp) / (pm + pp)));
    }
  }
  return {make("disc", "lsgan_optimum_4_atoms", worst, kDiscTolerance,
               std::to_string(problems) + " toy problems, pointwise max error")};
}

std::vector<CheckResult> check_sim(std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x51A});
  std::vector<CheckResult> out;
  constexpr double kL = 0.8;
  constexpr double kMass = 2.0;
  constexpr double kG = 9.81;
  const CharacterModel pend = pendulum_model(kL, kMass);

  // Instantaneous acceleration against theta'' = -(g / L) sin(theta).
  double worst_accel = 0.0;
  for (int i = 0; i < 50; ++i) {
    SimState s = SimState::zero(pend);
    s.q[3] = uniform(rng, -3.0, 3.0);
    s.qdot[3] = uniform(rng, -4.0, 4.0);
    const Eigen::VectorXd qdd = forward_dynamics(s, Eigen::VectorXd::Zero(1), {}, pend, kG, true);
    worst_accel = std::max(worst_accel, std::abs(qdd[3] + kG / kL * std::sin(s.q[3])));
  }
  out.push_back(make("sim", "pendulum_closed_form_accel", worst_accel, kPendulumTolerance));

  // Control steps against the closed-form recurrence integrated the same way.
  SimConfig cfg;
  cfg.ground_contact = false;
  cfg.fixed_root = true;
  cfg.gravity = kG;
  SimState s = SimState::zero(pend);
  s.q[3] = 1.2;
  double theta = 1.2;
  double omega = 0.0;
  double worst_step = 0.0;
  const Action hold{Eigen::VectorXd::Zero(1)};
  for (int k = 0; k < 30; ++k) {
    s = step_control(s, hold, pend, cfg);
    for (int sub = 0; sub < cfg.substeps(); ++sub) {
      omega += cfg.dt() * (-kG / kL * std::sin(theta));
      theta += cfg.dt() * omega;
    }
    worst_step = std::max(worst_step, std::abs(s.q[3] - theta));
  }
  out.push_back(make("sim", "pendulum_closed_form_steps", worst_step, kPendulumTolerance));

  // Self-convergence: the default rate against a 10x finer one over 1 s, for
  // a 1 m pendulum released from 0.5 rad.
  const CharacterModel unit = pendulum_model(1.0, kMass);
  SimConfig fine = cfg;
  fine.sim_hz = 10.0 * cfg.sim_hz;
  SimState coarse_s = SimState::zero(unit);
  coarse_s.q[3] = 0.5;
  SimState fine_s = coarse_s;
  double worst_conv = 0.0;
  for (int k = 0; k < static_cast<int>(cfg.control_hz); ++k) {
    coarse_s = step_control(coarse_s, hold, unit, cfg);
    fine_s = step_control(fine_s, hold, unit, fine);
    worst_conv = std::max(worst_conv, std::abs(coarse_s.q[3] - fine_s.q[3]));
  }
  out.push_back(make("sim", "self_convergence_1s", worst_conv, kConvergenceTolerance));

  // Net energy drift of the same passive pendulum after 1 s, relative to its
  // swing energy m g L (1 - cos theta_0). The symplectic integrator's bounded
  // within-period oscillation is reported separately and not gated.
  SimState e_s = SimState::zero(unit);
  e_s.q[3] = 0.5;
  const double e0 = total_energy(e_s, unit, kG);
  const double swing = kMass * kG * (1.0 - std::cos(0.5));
  double oscillation = 0.0;
  for (int k = 0; k < static_cast<int>(cfg.control_hz); ++k) {
    e_s = step_control(e_s, hold, unit, cfg);
    oscillation = std::max(oscillation, std::abs(total_energy(e_s, unit, kG) - e0));
  }
  char osc[64];
  std::snprintf(osc, sizeof osc, "max in-period oscillation %.2e", oscillation / swing);
  out.push_back(make("sim", "pendulum_energy_drift", std::abs(total_energy(e_s, unit, kG) - e0) / swing,
                     kEnergyTolerance, osc));

  // Free-floating walker without gravity or contact: momentum is constant
  // even with the joint motors running.
  const CharacterModel walker = CharacterModel::builtin("walker5");
  SimConfig space;
  space.ground_contact = false;
  space.gravity = 0.0;
  SimState w = SimState::zero(walker);
  w.q.tail(4) = Eigen::Vector4d(0.3, -0.5, -0.2, -0.9);
  w.qdot = random_vector(rng, walker.dof());
  w.q[1] = 2.0;
  double worst_momentum = 0.0;
  Eigen::Vector2d p0 = linear_momentum(w, walker);
  for (int k = 0; k < 30; ++k) {
    const Action a{random_vector(rng, 4, 0.8)};
    w = step_control(w, a, walker, space);
    const Eigen::Vector2d p = linear_momentum(w, walker);
    worst_momentum = std::max(worst_momentum, (p - p0).norm());
    p0 = p;
  }
  out.push_back(make("sim", "momentum_conservation_per_step", worst_momentum, kMomentumTolerance));

  // Gravity only: the horizontal component is still conserved.
  SimConfig falling = space;
  falling.gravity = kG;
  w = SimState::zero(walker);
  w.qdot = random_vector(rng, walker.dof());
  w.q[1] = 50.0;
  double worst_horizontal = 0.0;
  double px0 = linear_momentum(w, walker).x();
  for (int k = 0; k < 30; ++k) {
    w = step_control(w, Action{random_vector(rng, 4, 0.8)}, walker, falling);
    const double px = linear_momentum(w, walker).x();
    worst_horizontal = std::max(worst_horizontal, std::abs(px - px0));
    px0 = px;
  }
  out.push_back(make("sim", "horizontal_momentum_under_gravity", worst_horizontal, kMomentumTolerance));
  return out;
}

std::vector<std::string> scopes() { return {"grads", "gae", "dtw", "disc", "sim"}; }

std::vector<CheckResult> run(const std::string& scope, std::uint64_t seed) {
  if (scope == "all") {
    std::vector<CheckResult> all;
    for (const auto& s : scopes()) {
      auto r = run(s, seed);
      all.insert(all.end(), r.begin(), r.end());
    }
    return all;
  }
  if (scope == "grads") return check_grads(seed);
  if (scope == "gae") return check_returns(seed);
  if (scope == "dtw") return check_dtw(seed);
  if (scope == "disc") return check_discriminator(seed);
  if (scope == "sim") return check_sim(seed);
  throw Error(ErrorKind::kInvalidInput, "unknown check scope '" + scope + "' (grads, gae, dtw, disc, sim, all)");
}

std::string format_table(const std::vector<CheckResult>& results) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-6s %-36s %12s %10s  %s\n", "suite", "check", "error", "tol", "result");
  out << line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-6s %-36s %12.3e %10.1e  %s", r.suite.c_str(), r.name.c_str(), r.value,
                  r.tolerance, r.pass ? "PASS" : "FAIL");
    out << line;
    if (!r.detail.empty()) out << "  (" << r.detail << ")";
    out << '\n';
  }
  return out.str();
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
}

}  // namespace amp::selfcheck
