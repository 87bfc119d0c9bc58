#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "amp/character.hpp"
#include "amp/motion.hpp"
#include "amp/prior.hpp"
#include "amp/rl.hpp"

namespace amp {

// Root position plus world positions of the tracked points of one frame.
struct PoseFrame {
  Eigen::Vector2d root = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> joints;
};

using PoseSequence = std::vector<PoseFrame>;

// Tracked points: every joint pivot followed by every end effector.
PoseFrame pose_points(const CharacterModel& model, const Eigen::VectorXd& q);
PoseSequence pose_sequence(const CharacterModel& model, const MotionClip& clip);

/// Mean over tracked points of the distance between root-relative positions.
/// Throws Error(kDimensionMismatch) when the point counts differ.
double pose_error(const PoseFrame& a, const PoseFrame& b);

struct DtwResult {
  std::vector<std::pair<int, int>> path;  // (index in a, index in b), first to last
  double total_cost = 0.0;
  double mean_error = 0.0;  // total_cost / path length
};

/// Minimum-cost monotone alignment with steps (1,0), (0,1), (1,1) and both
/// endpoints pinned. Among equal-cost predecessors the diagonal is preferred.
/// Throws Error(kEmpty) on an empty sequence.
DtwResult dtw_align(const PoseSequence& a, const PoseSequence& b);

// Sum of task rewards over the maximum episode length; rewards lie in [0, 1].
double normalized_task_return(const std::vector<double>& task_rewards, int horizon_steps);

struct EvalOptions {
  int episodes = 32;
  std::uint64_t seed = 1;
  bool mean_actions = false;  // stochastic actions by default, as in training
  int workers = 1;
  // Imitation: start each episode on frame 0 of `clip` and compare the
  // simulated poses with that clip.
  bool imitation = false;
  int clip = 0;
};

struct EpisodeRecord {
  int length = 0;
  double task_return = 0.0;  // normalized
  double style_reward = 0.0;  // mean per step, 0 without a prior
  double dtw_error = 0.0;     // imitation only
  EndKind end = EndKind::kNone;
  PoseSequence poses;
};

struct EvalReport {
  std::string mode;
  int episodes = 0;
  double mean_dtw_error = 0.0;
  double std_dtw_error = 0.0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double mean_style_reward = 0.0;
  double mean_length = 0.0;
  int min_length = 0;
  int max_length = 0;
  std::vector<EpisodeRecord> records;

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Runs `options.episodes` episodes; episode i draws from a seed derived from
/// (options.seed, i), so reports do not depend on the worker count.
EvalReport evaluate(const EnvFactory& make_env, const Agent& agent, const MotionPrior* prior,
                    const MotionDataset& dataset, const EvalOptions& options);

// Per-episode tracked-point positions as CSV (episode, step, point, x, y).
std::string poses_to_csv(const EvalReport& report);

}  // namespace amp
