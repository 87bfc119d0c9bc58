#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace amp {

/// Every training and evaluation setting. Optional fields left unset take a
/// task-dependent default (see resolved_*).
struct TrainerConfig {
  std::string character = "pointmass";
  std::string task = "imitate";
  std::string motion;  // clip files or manifests, comma-separated
  std::string out_dir = "runs/amp";
  std::uint64_t seed = 1;
  std::string ablation;  // "", "no-gp" or "no-vel"

  double w_task = 0.5;
  double w_style = 0.5;
  std::optional<double> gamma;
  double lambda = 0.95;
  double ppo_clip = 0.02;
  std::optional<double> policy_stepsize;
  std::optional<double> value_stepsize;
  double momentum = 0.9;
  int samples_per_iter = 4096;
  int minibatch = 256;
  int ppo_epochs = 1;
  bool normalize_advantages = true;
  bool normalize_inputs = true;
  double action_std = 0.1;
  double policy_output_scale = 0.01;
  std::vector<int> policy_hidden{256, 128};
  std::vector<int> value_hidden{256, 128};

  double w_gp = 10.0;
  int disc_batch = 256;
  double disc_stepsize = 1e-5;
  double disc_momentum = 0.9;
  int disc_updates = 0;
  int replay_capacity = 100000;
  std::vector<int> disc_hidden{256, 128};
  bool disc_normalize = true;
  bool disc_velocity = true;

  double horizon = 20.0;
  double goal_resample = 4.0;
  std::string early_termination = "auto";  // auto | on | off
  std::string effector = "hand";
  double near_radius = 1.375;
  double sim_hz = 1200.0;
  double control_hz = 30.0;

  long long max_samples = 2000000;
  int max_iterations = 0;
  int checkpoint_every = 10;
  int workers = 0;  // 0 = hardware concurrency
  int eval_episodes = 32;

  bool imitation() const { return task == "imitate"; }
  double resolved_gamma() const { return gamma.value_or(imitation() ? 0.95 : 0.99); }
  double resolved_policy_stepsize() const { return policy_stepsize.value_or(imitation() ? 2e-6 : 4e-6); }
  double resolved_value_stepsize() const { return value_stepsize.value_or(imitation() ? 1e-4 : 2e-5); }
  // Imitation trains on the style reward alone.
  double resolved_w_task() const { return imitation() ? 0.0 : w_task; }
  int resolved_workers() const;
  std::vector<std::string> motion_paths() const;

  /// Throws Error(kInvalidInput) on out-of-range values.
  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string provenance;  // "paper" or "impl"
  std::string help;
  std::function<void(TrainerConfig&, const std::string&)> set;
  std::function<std::string(const TrainerConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();
const ConfigKey* find_config_key(const std::string& name);

// Throws Error(kInvalidInput) naming the key for unknown keys or bad values.
void set_config_value(TrainerConfig& cfg, const std::string& key, const std::string& value);

/// Parses "key = value" lines; '#' starts a comment.
void apply_config_text(TrainerConfig& cfg, const std::string& text, const std::string& source);
void apply_config_file(TrainerConfig& cfg, const std::string& path);
/// Applies AMP_<KEY> variables (upper case, '-' as '_') from the environment.
void apply_config_env(TrainerConfig& cfg);

// Canonical "key = value" text for every key, in registry order.
std::string config_to_text(const TrainerConfig& cfg);

// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

}  // namespace amp
