#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "amp/checkpoint.hpp"
#include "amp/config.hpp"
#include "amp/error.hpp"
#include "amp/generate.hpp"
#include "amp/trainer.hpp"
#include "test_util.hpp"

namespace amp {
namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no exception";
  return ErrorKind::kInternal;
}

TEST(Config, TextOverridesAndComments) {
  TrainerConfig cfg;
  apply_config_text(cfg,
                    "# desk run\n"
                    "task = heading\n"
                    "samples_per_iter = 512   # small\n"
                    "policy_hidden = 32,16\n"
                    "gamma = 0.9\n",
                    "test.cfg");
  EXPECT_EQ(cfg.task, "heading");
  EXPECT_EQ(cfg.samples_per_iter, 512);
  EXPECT_EQ(cfg.policy_hidden, (std::vector<int>{32, 16}));
  EXPECT_EQ(cfg.resolved_gamma(), 0.9);
}

TEST(Config, TaskDependentDefaults) {
  TrainerConfig cfg;
  EXPECT_EQ(cfg.resolved_gamma(), 0.95);
  EXPECT_EQ(cfg.resolved_w_task(), 0.0);
  EXPECT_EQ(cfg.resolved_policy_stepsize(), 2e-6);
  cfg.task = "heading";
  EXPECT_EQ(cfg.resolved_gamma(), 0.99);
  EXPECT_EQ(cfg.resolved_w_task(), 0.5);
  EXPECT_EQ(cfg.resolved_value_stepsize(), 2e-5);
}

TEST(Config, UnknownKeyAndBadValueNameTheKey) {
  TrainerConfig cfg;
  try {
    set_config_value(cfg, "warp_factor", "9");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
    EXPECT_NE(std::string(e.what()).find("warp_factor"), std::string::npos);
  }
  try {
    set_config_value(cfg, "samples_per_iter", "lots");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("samples_per_iter"), std::string::npos);
  }
}

TEST(Config, ValidateRejectsOutOfRange) {
  TrainerConfig cfg;
  cfg.samples_per_iter = 0;
  EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::kInvalidInput);
  cfg = TrainerConfig{};
  cfg.lambda = 1.5;
  EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::kInvalidInput);
  cfg = TrainerConfig{};
  cfg.early_termination = "sometimes";
  EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::kInvalidInput);
}

TEST(Config, EnvironmentVariables) {
  TrainerConfig cfg;
  ::setenv("AMP_SEED", "77", 1);
  ::setenv("AMP_W_GP", "2.5", 1);
  apply_config_env(cfg);
  ::unsetenv("AMP_SEED");
  ::unsetenv("AMP_W_GP");
  EXPECT_EQ(cfg.seed, 77u);
  EXPECT_EQ(cfg.w_gp, 2.5);
}

TEST(Config, TextRoundTripCoversEveryKey) {
  TrainerConfig cfg;
  cfg.task = "strike";
  cfg.gamma = 0.97;
  cfg.disc_hidden = {64, 64};
  cfg.action_std = 0.123456789;
  const std::string text = config_to_text(cfg);
  for (const auto& k : config_keys()) {
    EXPECT_NE(text.find(k.name + " = "), std::string::npos) << k.name;
    EXPECT_TRUE(k.provenance == "paper" || k.provenance == "impl") << k.name;
  }
  TrainerConfig back;
  apply_config_text(back, text, "roundtrip");
  EXPECT_EQ(config_to_text(back), text);
}

TEST(Config, ConfigFileMissingIsIoError) {
  TrainerConfig cfg;
  EXPECT_EQ(kind_of([&] { apply_config_file(cfg, "/nonexistent/amp.cfg"); }), ErrorKind::kIo);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(1e-5), "1e-05");
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = uniform(rng, -1e3, 1e3) * std::pow(10.0, uniform(rng, -10, 10));
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}

TEST(Ablation, NamesAndEffects) {
  TrainerConfig cfg;
  apply_ablation(cfg, "no-gp");
  EXPECT_EQ(cfg.w_gp, 0.0);
  apply_ablation(cfg, "no-vel");
  EXPECT_FALSE(cfg.disc_velocity);
  EXPECT_EQ(kind_of([&] { apply_ablation(cfg, "no-brain"); }), ErrorKind::kInvalidInput);
}

TrainerConfig small_config() {
  TrainerConfig cfg;
  cfg.motion = "synthetic:oscillate";
  cfg.policy_hidden = {8};
  cfg.value_hidden = {8};
  cfg.disc_hidden = {8};
  cfg.samples_per_iter = 64;
  cfg.workers = 1;
  return cfg;
}

TEST(Checkpoint, RoundTripIsExact) {
  const TrainerConfig cfg = small_config();
  const amp::Setup setup(cfg);
  TrainingState state = initial_state(cfg, setup);
  train_iteration(state, setup);
  const auto dir = test::scratch_dir("checkpoint");
  const std::string path = (dir / "ck.bin").string();
  save_checkpoint(path, state);
  const TrainingState back = load_checkpoint(path);
  EXPECT_EQ(back.iteration, state.iteration);
  EXPECT_EQ(back.samples, state.samples);
  EXPECT_EQ(config_to_text(back.config), config_to_text(state.config));
  EXPECT_EQ(back.agent.policy.mean_net().params().flatten(), state.agent.policy.mean_net().params().flatten());
  EXPECT_EQ(back.agent.policy.sigma(), state.agent.policy.sigma());
  EXPECT_EQ(back.agent.value.params().flatten(), state.agent.value.params().flatten());
  EXPECT_EQ(back.agent.normalizer.mean(), state.agent.normalizer.mean());
  EXPECT_EQ(back.policy_opt.velocity().flatten(), state.policy_opt.velocity().flatten());
  EXPECT_EQ(back.prior.disc().params().flatten(), state.prior.disc().params().flatten());
  EXPECT_EQ(back.prior.stats().std, state.prior.stats().std);
  EXPECT_EQ(back.replay.size(), state.replay.size());
  EXPECT_EQ(back.replay.head(), state.replay.head());
  // Saving what was loaded reproduces the file byte for byte.
  save_checkpoint((dir / "again.bin").string(), back);
  std::ifstream a(path, std::ios::binary);
  std::ifstream b(dir / "again.bin", std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST(Checkpoint, CorruptOrMissingFiles) {
  const auto dir = test::scratch_dir("checkpoint_bad");
  EXPECT_EQ(kind_of([&] { load_checkpoint((dir / "none.bin").string()); }), ErrorKind::kIo);
  std::ofstream((dir / "junk.bin").string(), std::ios::binary) << "definitely not a checkpoint";
  EXPECT_EQ(kind_of([&] { load_checkpoint((dir / "junk.bin").string()); }), ErrorKind::kSpecMismatch);
}

TEST(Checkpoint, IncompatibleSetupRejected) {
  TrainerConfig cfg = small_config();
  const amp::Setup setup(cfg);
  const TrainingState state = initial_state(cfg, setup);
  cfg.disc_velocity = false;
  const amp::Setup no_vel(cfg);
  EXPECT_EQ(kind_of([&] { check_compatible(state, no_vel); }), ErrorKind::kSpecMismatch);
  EXPECT_NO_THROW(check_compatible(state, setup));
}

TEST(GenClip, WalkerGaitSpansOneLoop) {
  const CharacterModel model = CharacterModel::builtin("walker5");
  const MotionClip clip = generate_clip("gait", model, ClipParams{});
  ASSERT_EQ(clip.num_frames(), 60);
  EXPECT_TRUE(clip.loopable);
  EXPECT_NEAR(clip.frames.back().root_position.x(), 2.0 * 59.0 / 60.0, 1e-12);
  const MotionClip v = finite_difference_velocities(clip);
  for (const Pose& p : v.frames) EXPECT_NEAR(p.root_linear_velocity.x(), 1.0, 1e-9);
  // Frame after the last would be frame 0 moved forward by one loop.
  const MotionClip two = generate_clip("gait", model, ClipParams{4.0});
  EXPECT_NEAR(two.frames[60].root_position.x() - clip.frames[0].root_position.x(), 2.0, 1e-12);
  EXPECT_LT((two.frames[60].joint_rotations - clip.frames[0].joint_rotations).norm(), 1e-12);
}

TEST(GenClip, ZeroAmplitudeIsStill) {
  for (const char* character : {"pointmass", "walker5"}) {
    const CharacterModel model = CharacterModel::builtin(character);
    ClipParams p;
    p.amplitude = 0.0;
    const MotionClip v = finite_difference_velocities(generate_clip("oscillate", model, p));
    for (const Pose& f : v.frames) {
      EXPECT_EQ(f.joint_velocities.norm(), 0.0) << character;
      EXPECT_EQ(f.root_linear_velocity.norm(), 0.0) << character;
    }
  }
}

TEST(GenClip, SpecStringSetsParameters) {
  const CharacterModel model = CharacterModel::builtin("pointmass");
  ClipParams p;
  p.speed = -3.0;
  p.duration = 1.0;
  const MotionClip a = generate_clip_from_spec("gait:speed=-3:duration=1", model);
  const MotionClip b = generate_clip("gait", model, p);
  ASSERT_EQ(a.num_frames(), b.num_frames());
  for (int i = 0; i < a.num_frames(); ++i) {
    EXPECT_EQ(a.frames[i].root_position, b.frames[i].root_position);
    EXPECT_EQ(a.frames[i].joint_rotations, b.frames[i].joint_rotations);
  }
  EXPECT_EQ(generate_clip_from_spec("oscillate", model).num_frames(), 60);
  for (const char* bad : {"gait:speed", "gait:warp=2", "gait:speed=fast", "gait:speed=1x", "gait:speed="}) {
    EXPECT_EQ(kind_of([&] { generate_clip_from_spec(bad, model); }), ErrorKind::kInvalidInput) << bad;
  }
}

TEST(GenClip, ReachNeedsShoulder) {
  EXPECT_EQ(kind_of([] { generate_clip("reach", CharacterModel::builtin("walker5"), ClipParams{}); }),
            ErrorKind::kInvalidInput);
  EXPECT_NO_THROW(generate_clip("reach", CharacterModel::builtin("walker5_arm"), ClipParams{}));
}

}  // namespace
}  // namespace amp
