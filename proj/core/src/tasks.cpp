#include "amp/tasks.hpp"

#include <algorithm>
#include <cmath>

#include "amp/error.hpp"
#include "amp/rotation.hpp"

namespace amp {
namespace {

// Unit vector on the horizontal axis pointing from `from` to `to` (zero when
// they coincide horizontally).
double horizontal_direction(const Eigen::Vector2d& from, const Eigen::Vector2d& to) {
  const double dx = to.x() - from.x();
  return dx > 0.0 ? 1.0 : (dx < 0.0 ? -1.0 : 0.0);
}

double sq(double x) { return x * x; }

}  // namespace

TaskKind parse_task(const std::string& name) {
  if (name == "imitate") return TaskKind::kImitate;
  if (name == "heading") return TaskKind::kHeading;
  if (name == "location") return TaskKind::kLocation;
  if (name == "dribble") return TaskKind::kDribble;
  if (name == "strike") return TaskKind::kStrike;
  if (name == "wave") return TaskKind::kWave;
  throw Error(ErrorKind::kInvalidInput,
              "unknown task '" + name + "' (expected imitate|heading|location|dribble|strike|wave)");
}

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kImitate: return "imitate";
    case TaskKind::kHeading: return "heading";
    case TaskKind::kLocation: return "location";
    case TaskKind::kDribble: return "dribble";
    case TaskKind::kStrike: return "strike";
    case TaskKind::kWave: return "wave";
  }
  return "imitate";
}

TaskSpec TaskSpec::defaults(TaskKind kind) {
  TaskSpec s;
  s.kind = kind;
  // Contact-rich tasks disable early termination.
  s.early_termination = kind != TaskKind::kDribble;
  if (kind == TaskKind::kImitate) s.resample_period = 0.0;
  if (kind == TaskKind::kWave) {
    s.wave_min = 1.0;
    s.wave_max = 1.9;
  }
  return s;
}

double target_heading_reward(const Eigen::Vector2d& com_velocity, const Goal& goal) {
  return std::exp(-0.25 * sq(goal.speed - goal.direction.dot(com_velocity)));
}

double target_location_reward(const Eigen::Vector2d& root, const Eigen::Vector2d& com_velocity,
                              const Eigen::Vector2d& target, double target_speed) {
  const double d = horizontal_direction(root, target);
  const double dist = target.x() - root.x();
  return 0.7 * std::exp(-0.5 * sq(dist)) +
         0.3 * std::exp(-sq(std::max(0.0, target_speed - d * com_velocity.x())));
}

DribbleTerms dribble_terms(const Eigen::Vector2d& com, const Eigen::Vector2d& com_velocity,
                           const Eigen::Vector2d& ball, const Eigen::Vector2d& ball_velocity,
                           const Eigen::Vector2d& target, double target_speed) {
  DribbleTerms t;
  const double d_ball = horizontal_direction(com, ball);
  const double d_target = horizontal_direction(ball, target);
  t.cv = std::exp(-1.5 * sq(std::max(0.0, target_speed - d_ball * com_velocity.x())));
  t.cp = std::exp(-0.5 * sq(ball.x() - com.x()));
  t.bv = std::exp(-sq(std::max(0.0, target_speed - d_target * ball_velocity.x())));
  t.bp = std::exp(-0.5 * sq(target.x() - ball.x()));
  return t;
}

double dribble_reward(const Eigen::Vector2d& com, const Eigen::Vector2d& com_velocity,
                      const Eigen::Vector2d& ball, const Eigen::Vector2d& ball_velocity,
                      const Eigen::Vector2d& target, double target_speed) {
  return dribble_terms(com, com_velocity, ball, ball_velocity, target, target_speed).total();
}

double strike_near_reward(const Eigen::Vector2d& root, const Eigen::Vector2d& effector,
                          const Eigen::Vector2d& effector_velocity, const Eigen::Vector2d& target) {
  const Eigen::Vector2d to_target = target - root;
  const double n = to_target.norm();
  const Eigen::Vector2d d = n > 0.0 ? Eigen::Vector2d(to_target / n) : Eigen::Vector2d::Zero();
  return 0.2 * std::exp(-2.0 * (target - effector).squaredNorm()) +
         0.8 * std::clamp((2.0 / 3.0) * d.dot(effector_velocity), 0.0, 1.0);
}

double strike_reward(const Eigen::Vector2d& root, const Eigen::Vector2d& com_velocity,
                     const Eigen::Vector2d& effector, const Eigen::Vector2d& effector_velocity,
                     const Goal& goal, double near_radius) {
  if (goal.hit) return 1.0;
  if (std::abs(goal.target.x() - root.x()) < near_radius) {
    return 0.3 * strike_near_reward(root, effector, effector_velocity, goal.target) + 0.3;
  }
  return 0.3 * target_location_reward(root, com_velocity, goal.target);
}

bool strike_hit(const Eigen::Vector2d& root, const Eigen::Vector2d& effector,
                const Eigen::Vector2d& effector_velocity, const Eigen::Vector2d& target, double radius) {
  if ((target - effector).norm() > radius) return false;
  return (target - root).dot(effector_velocity) > 0.0;
}

double wave_hand_reward(double hand_height, double target_height) {
  return std::exp(-16.0 * sq(hand_height - target_height));
}

double wave_composite_reward(const Eigen::Vector2d& com_velocity, double hand_height, const Goal& goal) {
  return 0.5 * target_heading_reward(com_velocity, goal) +
         0.5 * wave_hand_reward(hand_height, goal.hand_height);
}

Goal sample_goal(const TaskSpec& spec, const SimState& state, Rng& rng) {
  Goal g;
  const Eigen::Vector2d root = state.q.head<2>();
  const auto side = [&rng] { return uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0; };
  switch (spec.kind) {
    case TaskKind::kImitate:
      break;
    case TaskKind::kHeading:
    case TaskKind::kWave:
      g.direction = {side(), 0.0};
      g.speed = uniform(rng, spec.min_speed, spec.max_speed);
      if (spec.kind == TaskKind::kWave) g.hand_height = uniform(rng, spec.wave_min, spec.wave_max);
      break;
    case TaskKind::kLocation:
    case TaskKind::kDribble: {
      const double r = uniform(rng, spec.location_min, spec.location_max);
      g.target = {root.x() + side() * r, 0.0};
      break;
    }
    case TaskKind::kStrike: {
      const double r = uniform(rng, spec.strike_min, spec.strike_max);
      g.target = {root.x() + side() * r, uniform(rng, spec.strike_height_min, spec.strike_height_max)};
      break;
    }
  }
  return g;
}

int goal_dim(TaskKind kind) {
  switch (kind) {
    case TaskKind::kImitate: return 0;
    case TaskKind::kHeading: return 3;
    case TaskKind::kLocation: return 2;
    case TaskKind::kDribble: return 2 + kBallFeatureDim;
    case TaskKind::kStrike: return 3;
    case TaskKind::kWave: return 4;
  }
  return 0;
}

Eigen::VectorXd goal_features(const TaskSpec& spec, const Goal& goal, const SimState& state) {
  const Eigen::Vector2d root = state.q.head<2>();
  Eigen::VectorXd f(goal_dim(spec.kind));
  switch (spec.kind) {
    case TaskKind::kImitate:
      break;
    case TaskKind::kHeading:
      f << goal.direction, goal.speed;
      break;
    case TaskKind::kWave:
      f << goal.direction, goal.speed, goal.hand_height;
      break;
    case TaskKind::kLocation:
      f << goal.target - root;
      break;
    case TaskKind::kDribble:
      f << goal.target - root, ball_features(state);
      break;
    case TaskKind::kStrike:
      f << goal.target - root, goal.hit ? 1.0 : 0.0;
      break;
  }
  return f;
}

Eigen::VectorXd ball_features(const SimState& state) {
  if (!state.ball) throw Error(ErrorKind::kInvalidInput, "state has no ball");
  const BallState& b = *state.ball;
  const NormalTangent2 nt = rotation_to_normal_tangent(b.angle);
  Eigen::VectorXd f(kBallFeatureDim);
  f << b.position - state.q.head<2>(), nt.normal, b.velocity, b.angular_velocity;
  return f;
}

}  // namespace amp
