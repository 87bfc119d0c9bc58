#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "amp/environment.hpp"
#include "amp/mlp.hpp"
#include "amp/prior.hpp"
#include "amp/rng.hpp"

namespace amp {

// w_G * r_G + w_S * r_S
double combine_rewards(double task_reward, double style_reward, double w_task, double w_style);

/// lambda-returns: G_t = r_t + gamma ((1 - lambda) V_{t+1} + lambda G_{t+1}),
/// with V_T = G_T = `bootstrap`.
std::vector<double> td_lambda_targets(const std::vector<double>& rewards, const std::vector<double>& values,
                                      double bootstrap, double gamma, double lambda);

/// A_t = sum_k (gamma lambda)^k delta_{t+k}, delta_t = r_t + gamma V_{t+1} - V_t,
/// with V_T = `bootstrap`. Not normalized.
std::vector<double> gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                                   double bootstrap, double gamma, double lambda);

// Zero mean, unit std (std floored at 1e-8).
void normalize_in_place(std::vector<double>& x);

/// Running mean/variance of policy inputs. Frozen while a batch is collected
/// and updated between iterations.
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim);

  void update(const std::vector<Eigen::VectorXd>& samples);
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
  int dim() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& m2() const { return m2_; }
  void restore(double count, Eigen::VectorXd mean, Eigen::VectorXd m2);

  static constexpr double kClip = 5.0;

 private:
  double count_ = 0.0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

// Policy, value function and input normalization.
struct Agent {
  GaussianPolicy policy;
  Mlp value;
  RunningNormalizer normalizer;
  bool normalize_inputs = true;

  Eigen::VectorXd input(const Eigen::VectorXd& obs) const {
    return normalize_inputs ? normalizer.normalize(obs) : obs;
  }
};

struct Trajectory {
  std::vector<Eigen::VectorXd> observations;  // raw policy inputs s_0..s_{T-1}
  std::vector<Eigen::VectorXd> actions;
  std::vector<double> log_probs;
  std::vector<double> task_rewards;
  std::vector<double> style_rewards;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<Eigen::VectorXd> disc_observations;  // Phi(s_0)..Phi(s_T)
  double final_value = 0.0;                        // V(s_T)
  EndKind end = EndKind::kNone;

  int length() const { return static_cast<int>(rewards.size()); }
  // 0 after a failure (or goal end), V(s_T) after a timeout.
  double bootstrap() const { return end == EndKind::kTimeout ? final_value : 0.0; }
};

struct CollectConfig {
  int min_samples = 4096;
  double w_task = 0.5;
  double w_style = 0.5;
  std::uint64_t seed = 1;
  std::uint64_t iteration = 0;
  int workers = 1;
  bool mean_actions = false;
};

using EnvFactory = std::function<std::unique_ptr<Environment>()>;

/// Runs whole episodes until the total step count reaches `min_samples`.
/// Trajectory i uses a seed derived from (seed, iteration, i) and the set is
/// cut at the first index whose cumulative length reaches the budget, so the
/// result does not depend on the worker count. `prior` may be null (no style
/// reward).
std::vector<Trajectory> collect_trajectories(const EnvFactory& make_env, const Agent& agent,
                                             const MotionPrior* prior, const CollectConfig& cfg);

struct PpoConfig {
  double clip = 0.02;
  double gamma = 0.99;
  double lambda = 0.95;
  int minibatch = 256;
  int epochs = 1;
  bool normalize_advantages = true;
};

struct PpoBatch {
  Eigen::MatrixXd inputs;   // normalized policy inputs, one column per sample
  Eigen::MatrixXd actions;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd targets;
  int size() const { return static_cast<int>(inputs.cols()); }
};

// Flattens trajectories into a batch with GAE advantages and TD(lambda) targets.
PpoBatch build_ppo_batch(const std::vector<Trajectory>& trajectories, const Agent& agent, const PpoConfig& cfg);

struct PpoDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  int minibatches = 0;
  int skipped = 0;  // non-finite losses or gradients
};

// Clipped-surrogate gradient for one minibatch; returns the loss and adds the
// gradient with respect to the policy mean network into `grads`.
double ppo_policy_gradient(const GaussianPolicy& policy, const Eigen::MatrixXd& inputs,
                           const Eigen::MatrixXd& actions, const Eigen::VectorXd& old_log_probs,
                           const Eigen::VectorXd& advantages, double clip, MlpParams& grads,
                           double* mean_ratio = nullptr, double* clip_fraction = nullptr);

/// One pass (per epoch) of shuffled minibatch steps on policy and value.
PpoDiagnostics ppo_update(Agent& agent, SgdMomentum& policy_opt, SgdMomentum& value_opt,
                          const PpoBatch& batch, const PpoConfig& cfg, Rng& rng);

}  // namespace amp
