#pragma once

#include <string>

#include <Eigen/Core>

#include "amp/character.hpp"
#include "amp/rng.hpp"
#include "amp/sim.hpp"

namespace amp {

enum class TaskKind { kImitate, kHeading, kLocation, kDribble, kStrike, kWave };

TaskKind parse_task(const std::string& name);
std::string to_string(TaskKind kind);

// All positions and directions are planar; targets live in the world frame
// and are converted to the heading frame for the policy.
struct Goal {
  Eigen::Vector2d direction{1.0, 0.0};  // heading, wave
  double speed = 1.0;                   // heading, wave
  Eigen::Vector2d target = Eigen::Vector2d::Zero();  // location, dribble, strike
  bool hit = false;                     // strike; never reset within an episode
  double hand_height = 0.0;             // wave
};

struct TaskSpec {
  TaskKind kind = TaskKind::kImitate;
  bool early_termination = true;
  double horizon = 20.0;         // seconds
  double resample_period = 4.0;  // seconds; 0 disables in-episode goal changes
  double min_speed = 1.0;
  double max_speed = 5.0;
  double location_min = 1.0;
  double location_max = 10.0;
  double strike_min = 0.5;
  double strike_max = 5.0;
  double strike_height_min = 0.7;
  double strike_height_max = 1.3;
  double wave_min = 0.3;
  double wave_max = 1.4;
  double near_radius = 1.375;
  double hit_radius = 0.1;
  std::string effector = "hand";  // strike and wave

  static TaskSpec defaults(TaskKind kind);
};

// exp(-0.25 (v* - d* . v_com)^2)
double target_heading_reward(const Eigen::Vector2d& com_velocity, const Goal& goal);

// 0.7 exp(-0.5 |x* - x_root|^2) + 0.3 exp(-max(0, v* - d* . v_com)^2), with
// distances on the horizontal axis and d* pointing from the root to the target.
double target_location_reward(const Eigen::Vector2d& root, const Eigen::Vector2d& com_velocity,
                              const Eigen::Vector2d& target, double target_speed = 1.0);

struct DribbleTerms {
  double cv = 0.0;
  double cp = 0.0;
  double bv = 0.0;
  double bp = 0.0;
  double total() const { return 0.1 * cv + 0.1 * cp + 0.3 * bv + 0.5 * bp; }
};

DribbleTerms dribble_terms(const Eigen::Vector2d& com, const Eigen::Vector2d& com_velocity,
                           const Eigen::Vector2d& ball, const Eigen::Vector2d& ball_velocity,
                           const Eigen::Vector2d& target, double target_speed = 1.0);
double dribble_reward(const Eigen::Vector2d& com, const Eigen::Vector2d& com_velocity,
                      const Eigen::Vector2d& ball, const Eigen::Vector2d& ball_velocity,
                      const Eigen::Vector2d& target, double target_speed = 1.0);

// 0.2 exp(-2 |x* - x_eff|^2) + 0.8 clip(2/3 d* . v_eff, 0, 1)
double strike_near_reward(const Eigen::Vector2d& root, const Eigen::Vector2d& effector,
                          const Eigen::Vector2d& effector_velocity, const Eigen::Vector2d& target);
double strike_reward(const Eigen::Vector2d& root, const Eigen::Vector2d& com_velocity,
                     const Eigen::Vector2d& effector, const Eigen::Vector2d& effector_velocity,
                     const Goal& goal, double near_radius = 1.375);
// Within `radius` of the target while moving toward it.
bool strike_hit(const Eigen::Vector2d& root, const Eigen::Vector2d& effector,
                const Eigen::Vector2d& effector_velocity, const Eigen::Vector2d& target, double radius);

// exp(-16 (y_hand - y*)^2)
double wave_hand_reward(double hand_height, double target_height);
double wave_composite_reward(const Eigen::Vector2d& com_velocity, double hand_height, const Goal& goal);

/// Draws a fresh goal. Headings are +-x uniformly (the planar horizontal
/// circle); targets are placed relative to the current root.
Goal sample_goal(const TaskSpec& spec, const SimState& state, Rng& rng);

int goal_dim(TaskKind kind);
// Goal features in the heading frame; translation-invariant.
Eigen::VectorXd goal_features(const TaskSpec& spec, const Goal& goal, const SimState& state);

// Ball features for dribble: relative position (2), orientation encoding (2),
// linear velocity (2), angular velocity (1).
inline constexpr int kBallFeatureDim = 7;
Eigen::VectorXd ball_features(const SimState& state);

}  // namespace amp
