#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "amp/mlp.hpp"
#include "amp/motion.hpp"
#include "amp/rng.hpp"

namespace amp {

// r = max(0, 1 - 0.25 (d - 1)^2)
double style_reward(double d);

// mean over real of (D - 1)^2 plus mean over fake of (D + 1)^2.
double lsgan_loss(const Eigen::VectorXd& real, const Eigen::VectorXd& fake);

struct PenaltyResult {
  double penalty = 0.0;  // mean over the batch of ||grad_phi D||^2
  MlpParams grads;       // gradient of `penalty` with respect to parameters
};

// Columns of `real_inputs` are discriminator inputs (Phi(s), Phi(s')).
PenaltyResult gradient_penalty(const Mlp& disc, const Eigen::MatrixXd& real_inputs);

struct DiscObjective {
  double loss = 0.0;  // LSGAN terms only
  double penalty = 0.0;
  double objective = 0.0;  // loss + w_gp / 2 * penalty
  double mean_real = 0.0;
  double mean_fake = 0.0;
};

/// Evaluates loss + (w_gp / 2) * penalty on the given batches and, if `grads`
/// is set, adds its parameter gradient.
DiscObjective discriminator_objective(const Mlp& disc, const Eigen::MatrixXd& real,
                                      const Eigen::MatrixXd& fake, double w_gp, MlpParams* grads);

/// FIFO ring buffer of policy observation pairs.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000);

  void push(const Eigen::VectorXd& obs, const Eigen::VectorXd& next_obs);
  // Pushes every consecutive pair of a trajectory's observations.
  void push_sequence(const std::vector<Eigen::VectorXd>& observations);
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> sample(int count, Rng& rng) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  // Entries oldest first.
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> ordered() const;

  // Storage order and write cursor, for exact checkpoint round trips.
  const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& storage() const { return entries_; }
  std::size_t head() const { return head_; }
  void restore(std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> entries, std::size_t head);

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> entries_;
};

struct DiscConfig {
  double w_gp = 10.0;
  int batch_size = 256;
  double stepsize = 1e-5;
  double momentum = 0.9;
  int updates = 0;  // per iteration; 0 means ceil(samples per iteration / batch)
};

struct DiscDiagnostics {
  double mean_d_real = 0.0;
  double mean_d_fake = 0.0;
  double penalty = 0.0;
  double loss = 0.0;
  int updates = 0;
  int rejected = 0;
};

/// The motion prior: a discriminator over normalized observation pairs plus
/// its optimizer. Replay entries hold raw observations.
class MotionPrior {
 public:
  MotionPrior() = default;
  MotionPrior(Mlp disc, FeatureStats stats, double stepsize, double momentum);

  const Mlp& disc() const { return disc_; }
  Mlp& disc() { return disc_; }
  const FeatureStats& stats() const { return stats_; }
  SgdMomentum& optimizer() { return opt_; }
  const SgdMomentum& optimizer() const { return opt_; }
  int obs_dim() const { return stats_.dim(); }

  Eigen::VectorXd input(const Eigen::VectorXd& obs, const Eigen::VectorXd& next_obs) const;
  double score(const Eigen::VectorXd& obs, const Eigen::VectorXd& next_obs) const;
  double reward(const Eigen::VectorXd& obs, const Eigen::VectorXd& next_obs) const {
    return style_reward(score(obs, next_obs));
  }

  /// `cfg.updates` optimizer steps (at least one), each on K dataset and K
  /// replay transitions. Throws Error(kEmpty) when the replay buffer is empty.
  DiscDiagnostics update(const MotionDataset& dataset, const ReplayBuffer& replay, const DiscConfig& cfg,
                         int updates, Rng& rng);

  // Mean ||grad_phi D||^2 over `count` dataset transitions.
  double real_gradient_norm_sq(const MotionDataset& dataset, int count, Rng& rng) const;

 private:
  Mlp disc_;
  FeatureStats stats_;
  SgdMomentum opt_;
};

}  // namespace amp
