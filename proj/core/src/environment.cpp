#include "amp/environment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "amp/error.hpp"
#include "amp/observation.hpp"

namespace amp {

const char* to_string(EndKind kind) {
  switch (kind) {
    case EndKind::kNone: return "none";
    case EndKind::kFailure: return "failure";
    case EndKind::kTimeout: return "timeout";
    case EndKind::kGoal: return "goal";
  }
  return "none";
}

Environment::Environment(const CharacterModel& model, const MotionDataset& dataset, TaskSpec task,
                         SimConfig sim)
    : model_(&model), dataset_(&dataset), task_(std::move(task)), sim_(std::move(sim)) {
  if (task_.kind == TaskKind::kDribble && !sim_.ball) sim_.ball = BallParams{};
  if (task_.kind == TaskKind::kStrike || task_.kind == TaskKind::kWave) {
    effector_ = model.find_end_effector(task_.effector);
    if (effector_ < 0) {
      std::string names;
      for (const auto& e : model.end_effectors) names += (names.empty() ? "" : ", ") + e.name;
      throw Error(ErrorKind::kInvalidInput, "task '" + to_string(task_.kind) + "' needs end effector '" +
                                                task_.effector + "'; character '" + model.name +
                                                "' has: " + names);
    }
  }
  state_ = SimState::zero(model);
}

int Environment::horizon_steps() const {
  return std::max(1, static_cast<int>(std::lround(task_.horizon * sim_.control_hz)));
}

int Environment::goal_period_steps() const {
  return static_cast<int>(std::lround(task_.resample_period * sim_.control_hz));
}

void Environment::reset(Rng& rng) { reset_to(dataset_->sample_reference_state(rng), rng); }

void Environment::reset_to(const SimState& state, Rng& rng) {
  state_ = state;
  state_.sim_time = 0.0;
  state_.ball.reset();
  if (sim_.ball) {
    BallState b;
    b.position = {state_.q[0] + 0.6, sim_.ball->radius};
    state_.ball = b;
  }
  goal_ = sample_goal(task_, state_, rng);
  steps_ = 0;
}

Eigen::VectorXd Environment::observation() const {
  Eigen::VectorXd obs(obs_dim());
  obs << policy_state_features(state_, *model_), goal_features(task_, goal_, state_);
  return obs;
}

double Environment::task_reward() const {
  if (task_.kind == TaskKind::kImitate) return 0.0;
  const Kinematics kin(*model_, state_.q, state_.qdot);
  const Eigen::Vector2d root = kin.link_origin(0);
  const Eigen::Vector2d com_vel = kin.center_of_mass_velocity();
  switch (task_.kind) {
    case TaskKind::kHeading:
      return target_heading_reward(com_vel, goal_);
    case TaskKind::kLocation:
      return target_location_reward(root, com_vel, goal_.target);
    case TaskKind::kDribble:
      return dribble_reward(kin.center_of_mass(), com_vel, state_.ball->position, state_.ball->velocity,
                            goal_.target);
    case TaskKind::kStrike: {
      const EndEffector& e = model_->end_effectors[effector_];
      return strike_reward(root, com_vel, kin.point(e.link, e.offset), kin.point_velocity(e.link, e.offset),
                           goal_, task_.near_radius);
    }
    case TaskKind::kWave: {
      const EndEffector& e = model_->end_effectors[effector_];
      return wave_composite_reward(com_vel, kin.point(e.link, e.offset).y(), goal_);
    }
    case TaskKind::kImitate:
      break;
  }
  return 0.0;
}

void Environment::update_hit() {
  if (task_.kind != TaskKind::kStrike || goal_.hit) return;
  const Kinematics kin(*model_, state_.q, state_.qdot);
  const EndEffector& e = model_->end_effectors[effector_];
  goal_.hit = strike_hit(kin.link_origin(0), kin.point(e.link, e.offset), kin.point_velocity(e.link, e.offset),
                         goal_.target, task_.hit_radius);
}

StepResult Environment::step(const Eigen::VectorXd& action, Rng& rng) {
  StepResult r;
  try {
    state_ = step_control(state_, Action{action}, *model_, sim_);
  } catch (const SimulationDiverged& e) {
    state_ = e.last_valid();
    r.diverged = true;
    r.end = EndKind::kFailure;
  }
  ++steps_;
  update_hit();
  r.task_reward = task_reward();
  if (r.end == EndKind::kNone && check_early_termination(state_, *model_, task_.early_termination)) {
    r.end = EndKind::kFailure;
  }
  if (r.end == EndKind::kNone && steps_ >= horizon_steps()) r.end = EndKind::kTimeout;
  const int period = goal_period_steps();
  const bool resamples = task_.kind == TaskKind::kHeading || task_.kind == TaskKind::kLocation ||
                         task_.kind == TaskKind::kWave;
  if (r.end == EndKind::kNone && resamples && period > 0 && steps_ % period == 0) {
    goal_ = sample_goal(task_, state_, rng);
  }
  return r;
}

}  // namespace amp
