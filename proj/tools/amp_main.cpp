// amp: train, evaluate and inspect adversarial motion prior controllers.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "amp/checkpoint.hpp"
#include "amp/config.hpp"
#include "amp/error.hpp"
#include "amp/eval.hpp"
#include "amp/generate.hpp"
#include "amp/trainer.hpp"
#include "selfcheck/selfcheck.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitMismatch = 3;
constexpr int kExitCheckFailed = 4;

int exit_code_for(amp::ErrorKind kind) {
  switch (kind) {
    case amp::ErrorKind::kInvalidInput:
    case amp::ErrorKind::kParse:
    case amp::ErrorKind::kIo:
    case amp::ErrorKind::kEmpty:
    case amp::ErrorKind::kDimensionMismatch:
      return kExitInput;
    case amp::ErrorKind::kSpecMismatch:
      return kExitMismatch;
    case amp::ErrorKind::kSimulationDiverged:
    case amp::ErrorKind::kInternal:
      return 1;
  }
  return 1;
}

std::string flag_name(const std::string& key) {
  std::string s = key;
  for (char& c : s) {
    if (c == '_') c = '-';
  }
  return s;
}

// Every config key becomes a --flag; values are applied after the config file
// and environment so the command line wins.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    const amp::TrainerConfig defaults;
    for (const auto& key : amp::config_keys()) {
      const std::string help = key.help + " [default: " + key.get(defaults) + "; " +
                               (key.provenance == "paper" ? "paper value" : "implementation choice") + "]";
      // --clip reads better for single reference clips.
      const std::string names = key.name == "motion" ? "--motion,--clip" : "--" + flag_name(key.name);
      cmd.add_option(names, values[key.name], help);
    }
  }

  amp::TrainerConfig resolve(const CLI::App& cmd) const {
    amp::TrainerConfig cfg;
    if (!config_file.empty()) amp::apply_config_file(cfg, config_file);
    amp::apply_config_env(cfg);
    for (const auto& key : amp::config_keys()) {
      if (cmd.count("--" + flag_name(key.name)) > 0) amp::set_config_value(cfg, key.name, values.at(key.name));
    }
    cfg.validate();
    return cfg;
  }
};

void print_progress(const amp::IterationLog& log) {
  std::printf("iter %4llu  samples %9lld  len %6.1f  style %.3f  task %.3f  D(real) %+.3f  D(fake) %+.3f\n",
              static_cast<unsigned long long>(log.iteration), log.samples, log.mean_episode_length,
              log.mean_style_reward, log.mean_task_return, log.mean_d_real, log.mean_d_fake);
  std::fflush(stdout);
}

int run_train(const amp::TrainerConfig& cfg, bool resume, bool quiet) {
  amp::TrainOptions opts;
  opts.resume = resume;
  if (!quiet) opts.on_iteration = print_progress;
  std::printf("training %s on '%s' (%s), seed %llu, output %s\n", cfg.character.c_str(), cfg.task.c_str(),
              cfg.ablation.empty() ? "baseline" : cfg.ablation.c_str(), static_cast<unsigned long long>(cfg.seed),
              cfg.out_dir.c_str());
  const amp::TrainResult r = amp::train(cfg, opts);
  std::printf("done: %llu iterations, %lld samples\n", static_cast<unsigned long long>(r.state.iteration),
              r.state.samples);
  return kExitOk;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw amp::Error(amp::ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial motion priors for planar characters"};
  app.require_subcommand(1);

  // train
  CLI::App* train = app.add_subcommand("train", "train a policy and motion prior");
  ConfigFlags train_flags;
  train_flags.attach(*train);
  bool train_resume = false;
  bool train_quiet = false;
  train->add_flag("--resume", train_resume, "continue from <out-dir>/checkpoint.bin");
  train->add_flag("--quiet", train_quiet, "no per-iteration progress lines");

  // ablate
  CLI::App* ablate = app.add_subcommand("ablate", "train with one ablation applied (no-gp or no-vel)");
  std::string ablation;
  ablate->add_option("name", ablation, "no-gp | no-vel")->required()->check(CLI::IsMember(amp::ablation_names()));
  ConfigFlags ablate_flags;
  ablate_flags.attach(*ablate);
  bool ablate_quiet = false;
  ablate->add_flag("--quiet", ablate_quiet, "no per-iteration progress lines");

  // eval
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string checkpoint;
  std::string mode;
  std::string clip;
  int episodes = -1;
  std::uint64_t eval_seed = 1;
  bool mean_actions = false;
  int eval_workers = 0;
  std::string eval_out;
  bool dump_poses = false;
  eval->add_option("--checkpoint", checkpoint, "checkpoint.bin written by train")->required();
  eval->add_option("--mode", mode, "imitate | task (default: the checkpoint's task)")
      ->check(CLI::IsMember({"imitate", "task"}));
  eval->add_option("--clip", clip, "reference clip for imitate mode (file or synthetic:<kind>[:param=value]...)");
  eval->add_option("--episodes", episodes, "episodes to run [default: eval_episodes from the checkpoint, 32]");
  eval->add_option("--seed", eval_seed, "evaluation seed [default: 1]");
  eval->add_flag("--mean-actions", mean_actions, "use the policy mean instead of sampling");
  eval->add_option("--workers", eval_workers, "episode threads; 0 = available cores");
  eval->add_option("--out", eval_out, "report directory [default: the checkpoint's directory]");
  eval->add_flag("--dump-poses", dump_poses, "also write per-episode tracked point positions (poses.csv)");

  // gen-clip
  CLI::App* gen = app.add_subcommand("gen-clip", "write a synthetic reference clip");
  std::string kind;
  std::string gen_character = "pointmass";
  std::string gen_out;
  amp::ClipParams cp;
  gen->add_option("kind", kind, "oscillate | gait | reach")->required()->check(CLI::IsMember(amp::clip_kinds()));
  gen->add_option("--character", gen_character, "built-in name or character JSON")->capture_default_str();
  gen->add_option("--duration", cp.duration, "seconds")->capture_default_str();
  gen->add_option("--rate", cp.frame_rate, "frames per second")->capture_default_str();
  gen->add_option("--frequency", cp.frequency, "cycles per second")->capture_default_str();
  gen->add_option("--amplitude", cp.amplitude, "joint amplitude (rad)")->capture_default_str();
  gen->add_option("--speed", cp.speed, "root speed for gait (m/s)")->capture_default_str();
  gen->add_option("--reach-angle", cp.reach_angle, "peak shoulder angle for reach (rad)")->capture_default_str();
  gen->add_option("-o,--out", gen_out, "output clip path")->required();

  // check
  CLI::App* check = app.add_subcommand("check", "run the oracle self-checks");
  std::string scope = "all";
  std::uint64_t check_seed = 1;
  std::vector<std::string> scope_names = amp::selfcheck::scopes();
  scope_names.push_back("all");
  check->add_option("scope", scope, "grads | gae | dtw | disc | sim | all")
      ->check(CLI::IsMember(scope_names))
      ->capture_default_str();
  check->add_option("--seed", check_seed, "seed for random cases")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*train) return run_train(train_flags.resolve(*train), train_resume, train_quiet);

    if (*ablate) {
      amp::TrainerConfig cfg = ablate_flags.resolve(*ablate);
      amp::apply_ablation(cfg, ablation);
      return run_train(cfg, false, ablate_quiet);
    }

    if (*eval) {
      amp::TrainingState state = amp::load_checkpoint(checkpoint);
      amp::TrainerConfig cfg = state.config;
      const std::string resolved_mode = mode.empty() ? (cfg.imitation() ? "imitate" : "task") : mode;
      if (resolved_mode == "imitate") {
        if (clip.empty()) {
          std::cerr << "eval: imitate mode requires --clip\n";
          return kExitInput;
        }
        cfg.motion = clip;
      } else if (cfg.imitation()) {
        std::cerr << "eval: checkpoint was trained for imitation; task mode needs a task checkpoint\n";
        return kExitInput;
      }
      const amp::Setup setup(cfg);
      amp::check_compatible(state, setup);
      amp::EvalOptions opts;
      opts.episodes = episodes > 0 ? episodes : cfg.eval_episodes;
      opts.seed = eval_seed;
      opts.mean_actions = mean_actions;
      opts.workers = eval_workers > 0 ? eval_workers : cfg.resolved_workers();
      opts.imitation = resolved_mode == "imitate";
      const amp::EvalReport report = amp::evaluate(setup.factory(), state.agent, &state.prior, setup.dataset(), opts);
      const fs::path dir = eval_out.empty() ? fs::path(checkpoint).parent_path() : fs::path(eval_out);
      if (!dir.empty()) fs::create_directories(dir);
      write_text(dir / "eval.json", report.to_json() + "\n");
      write_text(dir / "eval.csv", amp::EvalReport::csv_header() + "\n" + report.csv_row() + "\n");
      if (dump_poses) write_text(dir / "poses.csv", amp::poses_to_csv(report));
      std::printf("%s\n%s\n", amp::EvalReport::csv_header().c_str(), report.csv_row().c_str());
      return kExitOk;
    }

    if (*gen) {
      const amp::CharacterModel model = amp::CharacterModel::resolve(gen_character);
      const amp::MotionClip c = amp::generate_clip(kind, model, cp);
      c.save(gen_out);
      std::printf("wrote %s: %d frames at %g Hz\n", gen_out.c_str(), c.num_frames(), c.frame_rate);
      return kExitOk;
    }

    if (*check) {
      const auto results = amp::selfcheck::run(scope, check_seed);
      std::cout << amp::selfcheck::format_table(results);
      return amp::selfcheck::all_passed(results) ? kExitOk : kExitCheckFailed;
    }
  } catch (const amp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
