#pragma once

#include <Eigen/Core>

#include "amp/character.hpp"
#include "amp/motion.hpp"
#include "amp/rng.hpp"
#include "amp/sim.hpp"
#include "amp/tasks.hpp"

namespace amp {

enum class EndKind { kNone, kFailure, kTimeout, kGoal };

const char* to_string(EndKind kind);

struct StepResult {
  double task_reward = 0.0;
  EndKind end = EndKind::kNone;
  bool diverged = false;
};

/// One episode at a time of a character performing a task. Not thread-safe;
/// rollout workers each own an instance.
class Environment {
 public:
  Environment(const CharacterModel& model, const MotionDataset& dataset, TaskSpec task, SimConfig sim);

  // Reference state initialization plus a fresh goal.
  void reset(Rng& rng);
  void reset_to(const SimState& state, Rng& rng);
  StepResult step(const Eigen::VectorXd& action, Rng& rng);

  // Policy input: state features followed by goal features.
  Eigen::VectorXd observation() const;
  Eigen::VectorXd disc_observation() const { return dataset_->observation_map()(state_); }

  int obs_dim() const { return policy_state_dim(*model_) + goal_dim(task_.kind); }
  int action_dim() const { return model_->num_joints(); }
  int steps() const { return steps_; }
  int horizon_steps() const;
  int goal_period_steps() const;

  const SimState& state() const { return state_; }
  const Goal& goal() const { return goal_; }
  const TaskSpec& task() const { return task_; }
  const SimConfig& sim_config() const { return sim_; }
  const CharacterModel& model() const { return *model_; }

  // Task reward of the current state under the current goal.
  double task_reward() const;

 private:
  void update_hit();

  const CharacterModel* model_;
  const MotionDataset* dataset_;
  TaskSpec task_;
  SimConfig sim_;
  SimState state_;
  Goal goal_;
  int effector_ = -1;
  int steps_ = 0;
};

}  // namespace amp
