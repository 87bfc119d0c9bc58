#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "amp/character.hpp"
#include "amp/eval.hpp"
#include "amp/mlp.hpp"

// Independent reference computations and the check suites built on them.
// Nothing here is used by training; the oracles deliberately take the slow,
// obvious route.
namespace amp::selfcheck {

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  double value = 0.0;      // worst observed error (or the measured quantity)
  double tolerance = 0.0;  // pass iff value < tolerance unless noted in detail
  std::string detail;
};

// ---- oracles ---------------------------------------------------------------

// Central difference of f along coordinate i of x.
double central_difference(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                          int i, double h);

// Relative error ||a - b|| / max(||a||, ||b||, floor).
double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-12);

// Smallest |pre-activation| over all hidden units at x.
double kink_margin(const Mlp& net, const Eigen::VectorXd& x);

// A_t as the explicit double sum over future TD errors.
std::vector<double> brute_force_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                                    double bootstrap, double gamma, double lambda);
// Lambda-return as the weighted average of n-step returns.
std::vector<double> brute_force_lambda_returns(const std::vector<double>& rewards,
                                               const std::vector<double>& values, double bootstrap,
                                               double gamma, double lambda);

struct PathOptimum {
  double total_cost = 0.0;
  double mean_error = 0.0;  // of the cheapest path, shortest among ties
  long long paths = 0;      // number of monotone paths enumerated
};
// Enumerates every monotone path with steps (1,0), (0,1), (1,1).
PathOptimum enumerate_dtw(const PoseSequence& a, const PoseSequence& b);

// Massless-rod pendulum: a pinned root with one hanging point-like link.
CharacterModel pendulum_model(double length, double mass);

// ---- suites ----------------------------------------------------------------

std::vector<CheckResult> check_grads(std::uint64_t seed = 1, int points = 100);
std::vector<CheckResult> check_returns(std::uint64_t seed = 1, int cases = 1000);
std::vector<CheckResult> check_dtw(std::uint64_t seed = 1, int pairs = 200);
std::vector<CheckResult> check_discriminator(std::uint64_t seed = 1, int problems = 5);
std::vector<CheckResult> check_sim(std::uint64_t seed = 1);

std::vector<std::string> scopes();  // grads, gae, dtw, disc, sim
// Runs one scope or "all". Throws Error(kInvalidInput) for unknown scopes.
std::vector<CheckResult> run(const std::string& scope, std::uint64_t seed = 1);

std::string format_table(const std::vector<CheckResult>& results);
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace amp::selfcheck
