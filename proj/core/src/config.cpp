#include "amp/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>
#include <type_traits>

#include "amp/error.hpp"

namespace amp {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorKind::kInvalidInput, "config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) bad_value(key, v, "a number");
  return x;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long i = 0;
  const auto [ip, iec] = std::from_chars(v.data(), v.data() + v.size(), i);
  if (iec == std::errc() && ip == v.data() + v.size()) return i;
  // Accept "2e6" style budgets as long as they are integral.
  const double x = parse_double(key, v);
  if (x != std::floor(x) || std::abs(x) > 9e18) bad_value(key, v, "an integer");
  return static_cast<long long>(x);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

std::vector<int> parse_widths(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const long long w = parse_int(key, item);
    if (w <= 0) bad_value(key, v, "positive layer widths");
    out.push_back(static_cast<int>(w));
  }
  if (out.empty()) bad_value(key, v, "a comma-separated width list");
  return out;
}

std::string widths_text(const std::vector<int>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

template <typename Member>
ConfigKey number_key(std::string name, std::string prov, std::string help, Member TrainerConfig::*m) {
  ConfigKey k{name, std::move(prov), std::move(help), nullptr, nullptr};
  k.set = [m, name](TrainerConfig& c, const std::string& v) {
    if constexpr (std::is_floating_point_v<Member>) {
      c.*m = parse_double(name, v);
    } else {
      c.*m = static_cast<Member>(parse_int(name, v));
    }
  };
  k.get = [m](const TrainerConfig& c) {
    if constexpr (std::is_floating_point_v<Member>) {
      return format_double(c.*m);
    } else {
      return std::to_string(c.*m);
    }
  };
  return k;
}

ConfigKey optional_key(std::string name, std::string prov, std::string help,
                       std::optional<double> TrainerConfig::*m) {
  ConfigKey k{name, std::move(prov), std::move(help), nullptr, nullptr};
  k.set = [m, name](TrainerConfig& c, const std::string& v) {
    if (v == "auto") {
      c.*m = std::nullopt;
    } else {
      c.*m = parse_double(name, v);
    }
  };
  k.get = [m](const TrainerConfig& c) { return (c.*m) ? format_double(*(c.*m)) : std::string("auto"); };
  return k;
}

ConfigKey string_key(std::string name, std::string prov, std::string help, std::string TrainerConfig::*m) {
  return {std::move(name), std::move(prov), std::move(help),
          [m](TrainerConfig& c, const std::string& v) { c.*m = v; },
          [m](const TrainerConfig& c) { return c.*m; }};
}

ConfigKey bool_key(std::string name, std::string prov, std::string help, bool TrainerConfig::*m) {
  ConfigKey k{name, std::move(prov), std::move(help), nullptr, nullptr};
  k.set = [m, name](TrainerConfig& c, const std::string& v) { c.*m = parse_bool(name, v); };
  k.get = [m](const TrainerConfig& c) { return std::string(c.*m ? "true" : "false"); };
  return k;
}

ConfigKey widths_key(std::string name, std::string prov, std::string help, std::vector<int> TrainerConfig::*m) {
  ConfigKey k{name, std::move(prov), std::move(help), nullptr, nullptr};
  k.set = [m, name](TrainerConfig& c, const std::string& v) { c.*m = parse_widths(name, v); };
  k.get = [m](const TrainerConfig& c) { return widths_text(c.*m); };
  return k;
}

std::vector<ConfigKey> build_keys() {
  using C = TrainerConfig;
  std::vector<ConfigKey> k;
  k.push_back(string_key("character", "impl", "built-in character name or character JSON path", &C::character));
  k.push_back(string_key("task", "paper", "imitate | heading | location | dribble | strike | wave", &C::task));
  k.push_back(string_key("motion", "impl", "comma-separated clip files or dataset manifests", &C::motion));
  k.push_back(string_key("out_dir", "impl", "output directory for logs and checkpoints", &C::out_dir));
  k.push_back(number_key("seed", "impl", "base random seed", &C::seed));
  k.push_back(string_key("ablation", "impl", "empty, no-gp or no-vel; tags logs", &C::ablation));
  k.push_back(number_key("w_task", "paper", "task reward weight (forced to 0 for imitate)", &C::w_task));
  k.push_back(number_key("w_style", "paper", "style reward weight", &C::w_style));
  k.push_back(optional_key("gamma", "paper", "discount; auto = 0.95 imitate, 0.99 tasks", &C::gamma));
  k.push_back(number_key("lambda", "paper", "GAE and TD(lambda) parameter", &C::lambda));
  k.push_back(number_key("ppo_clip", "paper", "PPO clip threshold", &C::ppo_clip));
  k.push_back(optional_key("policy_stepsize", "paper", "policy SGD stepsize; auto = 2e-6 imitate, 4e-6 tasks",
                           &C::policy_stepsize));
  k.push_back(optional_key("value_stepsize", "paper", "value SGD stepsize; auto = 1e-4 imitate, 2e-5 tasks",
                           &C::value_stepsize));
  k.push_back(number_key("momentum", "paper", "SGD momentum for policy and value", &C::momentum));
  k.push_back(number_key("samples_per_iter", "paper", "environment steps collected per iteration",
                         &C::samples_per_iter));
  k.push_back(number_key("minibatch", "paper", "policy/value minibatch size", &C::minibatch));
  k.push_back(number_key("ppo_epochs", "impl", "passes over each iteration's samples", &C::ppo_epochs));
  k.push_back(bool_key("normalize_advantages", "impl", "standardize advantages per batch",
                       &C::normalize_advantages));
  k.push_back(bool_key("normalize_inputs", "impl", "running mean/std normalization of policy inputs",
                       &C::normalize_inputs));
  k.push_back(number_key("action_std", "impl", "fixed policy action std (rad)", &C::action_std));
  k.push_back(number_key("policy_output_scale", "impl", "scale of the initial policy output layer",
                         &C::policy_output_scale));
  k.push_back(widths_key("policy_hidden", "impl", "policy hidden widths (full scale: 1024,512)", &C::policy_hidden));
  k.push_back(widths_key("value_hidden", "impl", "value hidden widths (full scale: 1024,512)", &C::value_hidden));
  k.push_back(number_key("w_gp", "paper", "gradient penalty weight", &C::w_gp));
  k.push_back(number_key("disc_batch", "paper", "discriminator batch size K", &C::disc_batch));
  k.push_back(number_key("disc_stepsize", "paper", "discriminator SGD stepsize", &C::disc_stepsize));
  k.push_back(number_key("disc_momentum", "paper", "discriminator SGD momentum", &C::disc_momentum));
  k.push_back(number_key("disc_updates", "impl", "discriminator steps per iteration; 0 = samples/K",
                         &C::disc_updates));
  k.push_back(number_key("replay_capacity", "paper", "discriminator replay buffer size", &C::replay_capacity));
  k.push_back(widths_key("disc_hidden", "impl", "discriminator hidden widths (full scale: 1024,512)", &C::disc_hidden));
  k.push_back(bool_key("disc_normalize", "impl", "normalize observations by dataset statistics",
                       &C::disc_normalize));
  k.push_back(bool_key("disc_velocity", "impl", "include velocity features in the observation map",
                       &C::disc_velocity));
  k.push_back(number_key("horizon", "paper", "episode length in seconds", &C::horizon));
  k.push_back(number_key("goal_resample", "impl", "seconds between goal changes; 0 disables",
                         &C::goal_resample));
  k.push_back(string_key("early_termination", "paper", "auto | on | off", &C::early_termination));
  k.push_back(string_key("effector", "impl", "end effector used by strike and wave", &C::effector));
  k.push_back(number_key("near_radius", "paper", "strike near-phase radius (m)", &C::near_radius));
  k.push_back(number_key("sim_hz", "paper", "simulation frequency", &C::sim_hz));
  k.push_back(number_key("control_hz", "paper", "policy query frequency", &C::control_hz));
  k.push_back(number_key("max_samples", "impl", "training sample budget", &C::max_samples));
  k.push_back(number_key("max_iterations", "impl", "iteration cap; 0 = budget only", &C::max_iterations));
  k.push_back(number_key("checkpoint_every", "impl", "iterations between checkpoints", &C::checkpoint_every));
  k.push_back(number_key("workers", "impl", "rollout threads; 0 = available cores", &C::workers));
  k.push_back(number_key("eval_episodes", "paper", "episodes per evaluation", &C::eval_episodes));
  return k;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

int TrainerConfig::resolved_workers() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<std::string> TrainerConfig::motion_paths() const {
  std::vector<std::string> out;
  std::stringstream ss(motion);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void TrainerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kInvalidInput, "config: " + msg); };
  const double g = resolved_gamma();
  if (!(g >= 0.0 && g < 1.0)) fail("gamma must be in [0, 1)");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must be in [0, 1]");
  if (!(ppo_clip > 0.0)) fail("ppo_clip must be positive");
  if (!(w_gp >= 0.0)) fail("w_gp must be non-negative");
  if (disc_batch <= 0 || minibatch <= 0 || samples_per_iter <= 0) fail("batch sizes must be positive");
  if (ppo_epochs <= 0) fail("ppo_epochs must be positive");
  if (replay_capacity <= 0) fail("replay_capacity must be positive");
  if (!(action_std > 0.0)) fail("action_std must be positive");
  if (!(horizon > 0.0)) fail("horizon must be positive");
  if (!(sim_hz > 0.0 && control_hz > 0.0)) fail("frequencies must be positive");
  if (max_samples <= 0) fail("max_samples must be positive");
  if (early_termination != "auto" && early_termination != "on" && early_termination != "off") {
    fail("early_termination must be auto, on or off");
  }
  if (!ablation.empty() && ablation != "no-gp" && ablation != "no-vel") {
    fail("unknown ablation '" + ablation + "' (expected no-gp or no-vel)");
  }
  if (eval_episodes <= 0) fail("eval_episodes must be positive");
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

const ConfigKey* find_config_key(const std::string& name) {
  std::string n = name;
  std::replace(n.begin(), n.end(), '-', '_');
  for (const auto& k : config_keys()) {
    if (k.name == n) return &k;
  }
  return nullptr;
}

void set_config_value(TrainerConfig& cfg, const std::string& key, const std::string& value) {
  const ConfigKey* k = find_config_key(key);
  if (k == nullptr) throw Error(ErrorKind::kInvalidInput, "unknown config key '" + key + "'");
  k->set(cfg, trim(value));
}

void apply_config_text(TrainerConfig& cfg, const std::string& text, const std::string& source) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kParse, source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorKind::kParse, source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void apply_config_file(TrainerConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

void apply_config_env(TrainerConfig& cfg) {
  for (const auto& k : config_keys()) {
    std::string var = "AMP_" + k.name;
    std::transform(var.begin(), var.end(), var.begin(), [](unsigned char c) { return std::toupper(c); });
    if (const char* v = std::getenv(var.c_str())) k.set(cfg, trim(v));
  }
}

std::string config_to_text(const TrainerConfig& cfg) {
  std::string out;
  for (const auto& k : config_keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace amp
