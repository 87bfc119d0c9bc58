#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "amp/character.hpp"
#include "amp/checkpoint.hpp"
#include "amp/config.hpp"
#include "amp/motion.hpp"
#include "amp/rl.hpp"
#include "amp/sim.hpp"
#include "amp/tasks.hpp"

namespace amp {

// Ablation names understood by apply_ablation.
std::vector<std::string> ablation_names();

/// "no-gp" zeroes the gradient penalty weight; "no-vel" drops the velocity
/// blocks from the discriminator observation. Throws Error(kInvalidInput) for
/// anything else.
void apply_ablation(TrainerConfig& cfg, const std::string& name);

/// Character, reference motion, task and simulator settings resolved from a
/// config. Motion entries of the form "synthetic:<kind>[:param=value]..." are
/// generated in memory.
class Setup {
 public:
  explicit Setup(const TrainerConfig& cfg);
  Setup(const Setup&) = delete;
  Setup& operator=(const Setup&) = delete;

  const CharacterModel& model() const { return *model_; }
  const MotionDataset& dataset() const { return *dataset_; }
  const TaskSpec& task() const { return task_; }
  const SimConfig& sim() const { return sim_; }
  int obs_dim() const;
  int action_dim() const { return model_->num_joints(); }
  int disc_obs_dim() const { return dataset_->obs_dim(); }

  EnvFactory factory() const;

 private:
  std::unique_ptr<CharacterModel> model_;
  std::unique_ptr<MotionDataset> dataset_;
  TaskSpec task_;
  SimConfig sim_;
};

/// Freshly initialized networks, optimizers and replay buffer.
TrainingState initial_state(const TrainerConfig& cfg, const Setup& setup);

// Throws Error(kSpecMismatch) when the saved networks do not fit the setup.
void check_compatible(const TrainingState& state, const Setup& setup);

struct IterationLog {
  std::uint64_t iteration = 0;
  long long samples = 0;  // cumulative
  int episodes = 0;
  double mean_episode_length = 0.0;
  double mean_return = 0.0;       // combined reward per episode
  double mean_task_return = 0.0;  // normalized by the horizon
  double mean_style_reward = 0.0;  // per step
  double mean_d_real = 0.0;
  double mean_d_fake = 0.0;
  double penalty = 0.0;
  double disc_loss = 0.0;
  double real_grad_norm_sq = 0.0;  // mean ||grad D||^2 on dataset pairs after the update
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  std::string tag;

  static std::string csv_header();
  // Shortest round-trip formatting, so equal runs give equal bytes.
  std::string csv_row() const;
};

/// One pass of the training loop: collect, store in the replay buffer, update
/// the discriminator, update policy and value, then refresh the input
/// normalizer.
IterationLog train_iteration(TrainingState& state, const Setup& setup);

struct TrainOptions {
  bool resume = false;  // continue from <out_dir>/checkpoint.bin
  bool write_files = true;
  std::function<void(const IterationLog&)> on_iteration;
};

struct TrainResult {
  TrainingState state;
  std::vector<IterationLog> logs;
};

/// Trains until max_samples (or max_iterations) is reached. With
/// `write_files`, writes manifest.json before starting, appends to train.csv
/// and timing.csv each iteration and refreshes checkpoint.bin every
/// checkpoint_every iterations and at the end.
TrainResult train(const TrainerConfig& cfg, const TrainOptions& options = {});

std::string code_version();

}  // namespace amp
