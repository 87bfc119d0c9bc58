#include "amp/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "amp/environment.hpp"
#include "amp/error.hpp"
#include "amp/eval.hpp"
#include "amp/generate.hpp"

#ifndef AMP_VERSION
#define AMP_VERSION "unknown"
#endif

namespace amp {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kInitStream = 0x1A17;
constexpr std::uint64_t kDiscStream = 2;
constexpr std::uint64_t kPpoStream = 3;
constexpr std::uint64_t kProbeStream = 4;
constexpr int kProbeSamples = 256;
constexpr const char* kSyntheticPrefix = "synthetic:";

bool early_termination_for(const TrainerConfig& cfg, TaskKind kind) {
  if (cfg.early_termination == "on") return true;
  if (cfg.early_termination == "off") return false;
  if (cfg.early_termination != "auto") {
    throw Error(ErrorKind::kInvalidInput, "early_termination must be auto, on or off; got '" +
                                              cfg.early_termination + "'");
  }
  // The ball can be pushed ahead while the character stumbles; failures there
  // only hide the learning signal.
  return kind != TaskKind::kDribble;
}

std::vector<MotionClip> resolve_clips(const TrainerConfig& cfg, const CharacterModel& model,
                                      std::vector<std::string>& files) {
  std::vector<MotionClip> synthetic;
  for (const std::string& p : cfg.motion_paths()) {
    if (p.rfind(kSyntheticPrefix, 0) == 0) {
      synthetic.push_back(generate_clip_from_spec(p.substr(std::string(kSyntheticPrefix).size()), model));
    } else {
      if (!fs::exists(p)) throw Error(ErrorKind::kIo, "motion file '" + p + "' does not exist");
      files.push_back(p);
    }
  }
  return synthetic;
}

std::string fmt(double x) { return format_double(x); }

void truncate_csv(const fs::path& path, std::uint64_t keep_below) {
  std::ifstream in(path);
  if (!in) return;
  std::vector<std::string> kept;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      kept.push_back(line);
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    if (std::stoull(line.substr(0, comma)) < keep_below) kept.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : kept) out << l << '\n';
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_manifest(const TrainerConfig& cfg, const Setup& setup, const TrainingState& state, bool resumed) {
  nlohmann::json j;
  j["code_version"] = code_version();
  j["seed"] = cfg.seed;
  j["character"] = setup.model().name;
  j["task"] = cfg.task;
  j["ablation"] = cfg.ablation;
  j["motion"] = cfg.motion_paths();
  j["out_dir"] = cfg.out_dir;
  j["started_at"] = utc_now();
  j["resumed_from_iteration"] = resumed ? static_cast<std::int64_t>(state.iteration) : -1;
  j["policy_obs_dim"] = setup.obs_dim();
  j["disc_obs_dim"] = setup.disc_obs_dim();
  j["action_dim"] = setup.action_dim();
  nlohmann::json c = nlohmann::json::object();
  for (const auto& k : config_keys()) c[k.name] = k.get(cfg);
  j["config"] = c;
  j["config_text"] = config_to_text(cfg);
  std::ofstream out(fs::path(cfg.out_dir) / "manifest.json", std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write manifest in '" + cfg.out_dir + "'");
  out << j.dump(2) << '\n';
}

}  // namespace

void check_compatible(const TrainingState& s, const Setup& setup) {
  const int obs = s.agent.policy.mean_net().spec().input_dim;
  if (obs != setup.obs_dim() || s.agent.policy.action_dim() != setup.action_dim() ||
      s.prior.obs_dim() != setup.disc_obs_dim()) {
    throw Error(ErrorKind::kSpecMismatch, "checkpoint networks do not match character '" + setup.model().name +
                                              "' and task '" + to_string(setup.task().kind) + "'");
  }
}

std::string code_version() { return AMP_VERSION; }

std::vector<std::string> ablation_names() { return {"no-gp", "no-vel"}; }

void apply_ablation(TrainerConfig& cfg, const std::string& name) {
  if (name == "no-gp") {
    cfg.w_gp = 0.0;
  } else if (name == "no-vel") {
    cfg.disc_velocity = false;
  } else {
    throw Error(ErrorKind::kInvalidInput, "unknown ablation '" + name + "' (expected no-gp or no-vel)");
  }
  cfg.ablation = name;
}

Setup::Setup(const TrainerConfig& cfg) {
  cfg.validate();
  model_ = std::make_unique<CharacterModel>(CharacterModel::resolve(cfg.character));
  model_->validate();
  const auto paths = cfg.motion_paths();
  if (paths.empty()) {
    throw Error(ErrorKind::kInvalidInput, "no reference motion given; set 'motion' to clip files or synthetic:<kind>");
  }
  std::vector<std::string> files;
  std::vector<MotionClip> clips = resolve_clips(cfg, *model_, files);
  ObsOptions opts;
  opts.include_velocities = cfg.disc_velocity;
  if (!files.empty()) {
    // Reuse the dataset loader for files and manifests, then add the
    // generated clips with unit weight.
    MotionDataset loaded = MotionDataset::load(*model_, files, opts);
    std::vector<MotionClip> all = loaded.clips();
    std::vector<double> weights(all.size(), 1.0);
    if (clips.empty()) {
      dataset_ = std::make_unique<MotionDataset>(std::move(loaded));
    } else {
      for (auto& c : clips) all.push_back(std::move(c));
      weights.resize(all.size(), 1.0);
      dataset_ = std::make_unique<MotionDataset>(*model_, std::move(all), std::move(weights), opts);
    }
  } else {
    dataset_ = std::make_unique<MotionDataset>(*model_, std::move(clips), std::vector<double>{}, opts);
  }

  const TaskKind kind = parse_task(cfg.task);
  task_ = TaskSpec::defaults(kind);
  task_.early_termination = early_termination_for(cfg, kind);
  task_.horizon = cfg.horizon;
  task_.resample_period = cfg.goal_resample;
  task_.effector = cfg.effector;
  task_.near_radius = cfg.near_radius;
  sim_.sim_hz = cfg.sim_hz;
  sim_.control_hz = cfg.control_hz;
  if (kind == TaskKind::kDribble) sim_.ball = BallParams{};
  factory()();  // surfaces task/character mismatches before training starts
}

int Setup::obs_dim() const { return policy_state_dim(*model_) + goal_dim(task_.kind); }

EnvFactory Setup::factory() const {
  return [this] { return std::make_unique<Environment>(*model_, *dataset_, task_, sim_); };
}

TrainingState initial_state(const TrainerConfig& cfg, const Setup& setup) {
  TrainingState s;
  s.config = cfg;
  s.character = setup.model().name;
  Rng rng = make_rng(cfg.seed, {kInitStream});
  const MlpSpec pspec{setup.obs_dim(), cfg.policy_hidden, setup.action_dim()};
  const MlpSpec vspec{setup.obs_dim(), cfg.value_hidden, 1};
  const MlpSpec dspec{2 * setup.disc_obs_dim(), cfg.disc_hidden, 1};
  s.agent.policy = GaussianPolicy(Mlp(pspec, rng, cfg.policy_output_scale),
                                  Eigen::VectorXd::Constant(setup.action_dim(), cfg.action_std));
  s.agent.value = Mlp(vspec, rng);
  s.agent.normalizer = RunningNormalizer(setup.obs_dim());
  s.agent.normalize_inputs = cfg.normalize_inputs;
  s.policy_opt = SgdMomentum(pspec, cfg.resolved_policy_stepsize(), cfg.momentum);
  s.value_opt = SgdMomentum(vspec, cfg.resolved_value_stepsize(), cfg.momentum);
  FeatureStats stats = cfg.disc_normalize ? setup.dataset().stats() : FeatureStats::identity(setup.disc_obs_dim());
  s.prior = MotionPrior(Mlp(dspec, rng), std::move(stats), cfg.disc_stepsize, cfg.disc_momentum);
  s.replay = ReplayBuffer(static_cast<std::size_t>(cfg.replay_capacity));
  return s;
}

std::string IterationLog::csv_header() {
  return "iteration,samples,episodes,mean_episode_length,mean_return,mean_task_return,mean_style_reward,"
         "mean_d_real,mean_d_fake,penalty,disc_loss,real_grad_norm_sq,policy_loss,value_loss,mean_ratio,"
         "clip_fraction,tag";
}

std::string IterationLog::csv_row() const {
  std::ostringstream o;
  o << iteration << ',' << samples << ',' << episodes << ',' << fmt(mean_episode_length) << ','
    << fmt(mean_return) << ',' << fmt(mean_task_return) << ',' << fmt(mean_style_reward) << ','
    << fmt(mean_d_real) << ',' << fmt(mean_d_fake) << ',' << fmt(penalty) << ',' << fmt(disc_loss) << ','
    << fmt(real_grad_norm_sq) << ',' << fmt(policy_loss) << ',' << fmt(value_loss) << ',' << fmt(mean_ratio)
    << ',' << fmt(clip_fraction) << ',' << tag;
  return o.str();
}

IterationLog train_iteration(TrainingState& state, const Setup& setup) {
  const TrainerConfig& cfg = state.config;
  const std::uint64_t it = state.iteration;

  CollectConfig cc;
  cc.min_samples = cfg.samples_per_iter;
  cc.w_task = cfg.resolved_w_task();
  cc.w_style = cfg.w_style;
  cc.seed = cfg.seed;
  cc.iteration = it;
  cc.workers = cfg.resolved_workers();
  const std::vector<Trajectory> trajs = collect_trajectories(setup.factory(), state.agent, &state.prior, cc);

  IterationLog log;
  log.iteration = it;
  log.tag = cfg.ablation.empty() ? "baseline" : cfg.ablation;
  log.episodes = static_cast<int>(trajs.size());
  int n = 0;
  double style_sum = 0.0;
  const int horizon_steps = std::max(1, static_cast<int>(std::lround(cfg.horizon * cfg.control_hz)));
  for (const Trajectory& t : trajs) {
    n += t.length();
    for (double r : t.rewards) log.mean_return += r;
    for (double r : t.style_rewards) style_sum += r;
    log.mean_task_return += normalized_task_return(t.task_rewards, horizon_steps);
    state.replay.push_sequence(t.disc_observations);
  }
  log.mean_episode_length = static_cast<double>(n) / log.episodes;
  log.mean_return /= log.episodes;
  log.mean_task_return /= log.episodes;
  log.mean_style_reward = style_sum / n;

  DiscConfig dc;
  dc.w_gp = cfg.w_gp;
  dc.batch_size = cfg.disc_batch;
  dc.stepsize = cfg.disc_stepsize;
  dc.momentum = cfg.disc_momentum;
  const int updates = cfg.disc_updates > 0 ? cfg.disc_updates : (n + cfg.disc_batch - 1) / cfg.disc_batch;
  Rng drng = make_rng(cfg.seed, {it, kDiscStream});
  const DiscDiagnostics dd = state.prior.update(setup.dataset(), state.replay, dc, updates, drng);
  log.mean_d_real = dd.mean_d_real;
  log.mean_d_fake = dd.mean_d_fake;
  log.penalty = dd.penalty;
  log.disc_loss = dd.loss;
  Rng probe = make_rng(cfg.seed, {it, kProbeStream});
  log.real_grad_norm_sq = state.prior.real_gradient_norm_sq(setup.dataset(), kProbeSamples, probe);

  PpoConfig pc;
  pc.clip = cfg.ppo_clip;
  pc.gamma = cfg.resolved_gamma();
  pc.lambda = cfg.lambda;
  pc.minibatch = cfg.minibatch;
  pc.epochs = cfg.ppo_epochs;
  pc.normalize_advantages = cfg.normalize_advantages;
  const PpoBatch batch = build_ppo_batch(trajs, state.agent, pc);
  Rng prng = make_rng(cfg.seed, {it, kPpoStream});
  const PpoDiagnostics pd = ppo_update(state.agent, state.policy_opt, state.value_opt, batch, pc, prng);
  log.policy_loss = pd.policy_loss;
  log.value_loss = pd.value_loss;
  log.mean_ratio = pd.mean_ratio;
  log.clip_fraction = pd.clip_fraction;

  if (state.agent.normalize_inputs) {
    std::vector<Eigen::VectorXd> obs;
    obs.reserve(n);
    for (const Trajectory& t : trajs) obs.insert(obs.end(), t.observations.begin(), t.observations.end());
    state.agent.normalizer.update(obs);
  }
  state.samples += n;
  state.iteration = it + 1;
  log.samples = state.samples;
  return log;
}

TrainResult train(const TrainerConfig& cfg, const TrainOptions& options) {
  const Setup setup(cfg);
  const fs::path dir(cfg.out_dir);
  const fs::path ckpt = dir / "checkpoint.bin";
  const fs::path csv = dir / "train.csv";
  const fs::path timing = dir / "timing.csv";

  TrainResult result;
  if (options.resume) {
    result.state = load_checkpoint(ckpt.string());
    check_compatible(result.state, setup);
    // Hyperparameters come from the caller, so budgets can be extended.
    result.state.config = cfg;
    result.state.policy_opt.set_stepsize(cfg.resolved_policy_stepsize());
    result.state.value_opt.set_stepsize(cfg.resolved_value_stepsize());
  } else {
    result.state = initial_state(cfg, setup);
  }
  TrainingState& state = result.state;

  std::ofstream csv_out;
  std::ofstream timing_out;
  if (options.write_files) {
    fs::create_directories(dir);
    write_manifest(cfg, setup, state, options.resume);
    if (options.resume) {
      truncate_csv(csv, state.iteration);
      truncate_csv(timing, state.iteration);
      csv_out.open(csv, std::ios::app);
      timing_out.open(timing, std::ios::app);
    } else {
      csv_out.open(csv, std::ios::trunc);
      timing_out.open(timing, std::ios::trunc);
      csv_out << IterationLog::csv_header() << '\n';
      timing_out << "iteration,wall_seconds\n";
    }
    if (!csv_out || !timing_out) throw Error(ErrorKind::kIo, "cannot write logs in '" + cfg.out_dir + "'");
  }

  auto done = [&] {
    if (state.samples >= cfg.max_samples) return true;
    return cfg.max_iterations > 0 && state.iteration >= static_cast<std::uint64_t>(cfg.max_iterations);
  };
  while (!done()) {
    const auto t0 = std::chrono::steady_clock::now();
    IterationLog log = train_iteration(state, setup);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (options.write_files) {
      csv_out << log.csv_row() << '\n' << std::flush;
      timing_out << log.iteration << ',' << secs << '\n' << std::flush;
      if (cfg.checkpoint_every > 0 && state.iteration % cfg.checkpoint_every == 0) {
        save_checkpoint(ckpt.string(), state);
      }
    }
    if (options.on_iteration) options.on_iteration(log);
    result.logs.push_back(std::move(log));
  }
  if (options.write_files) save_checkpoint(ckpt.string(), state);
  return result;
}

}  // namespace amp
