#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "amp/trainer.hpp"
#include "test_util.hpp"

namespace amp {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

TrainerConfig tiny(const fs::path& out) {
  TrainerConfig cfg;
  cfg.motion = "synthetic:oscillate";
  cfg.out_dir = out.string();
  cfg.policy_hidden = {16};
  cfg.value_hidden = {16};
  cfg.disc_hidden = {16};
  cfg.samples_per_iter = 128;
  cfg.disc_batch = 64;
  cfg.minibatch = 64;
  cfg.workers = 1;
  cfg.checkpoint_every = 2;
  return cfg;
}

TEST(Trainer, OneIterationBudget) {
  const fs::path dir = test::scratch_dir("trainer_one");
  TrainerConfig cfg = tiny(dir);
  cfg.max_samples = 1;
  const TrainResult r = train(cfg);
  ASSERT_EQ(r.logs.size(), 1u);
  EXPECT_GE(r.logs[0].samples, 128);
  EXPECT_EQ(count_lines(slurp(dir / "train.csv")), 2);
  EXPECT_TRUE(fs::exists(dir / "checkpoint.bin"));
  EXPECT_TRUE(fs::exists(dir / "timing.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 1);
  EXPECT_EQ(manifest["task"], "imitate");
  EXPECT_EQ(manifest["resumed_from_iteration"], -1);
}

TEST(Trainer, LogsAreSane) {
  const fs::path dir = test::scratch_dir("trainer_sane");
  TrainerConfig cfg = tiny(dir);
  cfg.max_iterations = 3;
  TrainOptions opt;
  opt.write_files = false;
  int seen = 0;
  opt.on_iteration = [&seen](const IterationLog&) { ++seen; };
  const TrainResult r = train(cfg, opt);
  EXPECT_EQ(seen, 3);
  EXPECT_FALSE(fs::exists(dir / "train.csv"));
  for (const auto& log : r.logs) {
    EXPECT_GE(log.mean_style_reward, 0.0);
    EXPECT_LE(log.mean_style_reward, 1.0);
    EXPECT_GE(log.real_grad_norm_sq, 0.0);
    EXPECT_GT(log.episodes, 0);
  }
  EXPECT_EQ(r.state.agent.policy.sigma(), Eigen::VectorXd::Constant(1, cfg.action_std));
}

// Checkpoints embed the output directory, so reruns share one.
TEST(Trainer, RerunIsByteIdentical) {
  const fs::path dir = test::scratch_dir("trainer_rerun");
  TrainerConfig cfg = tiny(dir);
  cfg.max_iterations = 3;
  train(cfg);
  const std::string csv = slurp(dir / "train.csv");
  const std::string ckpt = slurp(dir / "checkpoint.bin");
  train(cfg);
  EXPECT_EQ(slurp(dir / "train.csv"), csv);
  EXPECT_EQ(slurp(dir / "checkpoint.bin"), ckpt);
}

TEST(Trainer, ResumeMatchesUninterruptedRun) {
  const fs::path dir = test::scratch_dir("trainer_resume");
  TrainerConfig cfg = tiny(dir);
  cfg.max_iterations = 4;
  train(cfg);
  const std::string csv = slurp(dir / "train.csv");
  const std::string ckpt = slurp(dir / "checkpoint.bin");

  test::scratch_dir("trainer_resume");
  cfg.max_iterations = 2;
  train(cfg);
  cfg.max_iterations = 4;
  TrainOptions resume;
  resume.resume = true;
  const TrainResult r = train(cfg, resume);
  EXPECT_EQ(r.logs.size(), 2u);
  EXPECT_EQ(slurp(dir / "train.csv"), csv);
  EXPECT_EQ(slurp(dir / "checkpoint.bin"), ckpt);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "manifest.json"))["resumed_from_iteration"], 2);
}

TEST(Trainer, NoVelocityAblationShrinksDiscriminatorInput) {
  TrainerConfig cfg = tiny(test::scratch_dir("trainer_novel"));
  const amp::Setup with(cfg);
  apply_ablation(cfg, "no-vel");
  const amp::Setup without(cfg);
  // Root linear and angular velocity plus one velocity per joint.
  EXPECT_EQ(with.disc_obs_dim() - without.disc_obs_dim(), 3 + with.action_dim());
  const TrainingState s = initial_state(cfg, without);
  EXPECT_EQ(s.prior.disc().spec().input_dim, 2 * without.disc_obs_dim());
}

TEST(Trainer, NoGpManifestRecordsZeroWeight) {
  const fs::path dir = test::scratch_dir("trainer_nogp");
  TrainerConfig cfg = tiny(dir);
  apply_ablation(cfg, "no-gp");
  cfg.max_iterations = 1;
  train(cfg);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["ablation"], "no-gp");
  EXPECT_EQ(std::stod(manifest["config"]["w_gp"].get<std::string>()), 0.0);
}

TEST(Trainer, ZeroStyleWeightGivesZeroImitationReward) {
  TrainerConfig cfg = tiny(test::scratch_dir("trainer_ws0"));
  cfg.w_style = 0.0;
  cfg.max_iterations = 1;
  TrainOptions opt;
  opt.write_files = false;
  const TrainResult r = train(cfg, opt);
  EXPECT_EQ(r.logs[0].mean_return, 0.0);
}

}  // namespace
}  // namespace amp
