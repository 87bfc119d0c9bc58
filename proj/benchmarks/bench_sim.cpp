#include <benchmark/benchmark.h>

#include "amp/character.hpp"
#include "amp/environment.hpp"
#include "amp/generate.hpp"
#include "amp/motion.hpp"
#include "amp/sim.hpp"

namespace {

void BM_StepControl(benchmark::State& st, const char* name) {
  const amp::CharacterModel model = amp::CharacterModel::builtin(name);
  const amp::MotionDataset data(model, {amp::generate_clip("oscillate", model, {})});
  amp::SimState s = data.reference_state(0, 0);
  amp::Action a{Eigen::VectorXd::Zero(model.num_joints())};
  const amp::SimConfig cfg;
  for (auto _ : st) {
    amp::SimState next = amp::step_control(s, a, model, cfg);
    benchmark::DoNotOptimize(next.q.data());
  }
  st.SetItemsProcessed(st.iterations());
}
BENCHMARK_CAPTURE(BM_StepControl, pointmass, "pointmass");
BENCHMARK_CAPTURE(BM_StepControl, walker5, "walker5");

void BM_MassMatrix(benchmark::State& st) {
  const amp::CharacterModel model = amp::CharacterModel::builtin("walker5_arm");
  const Eigen::VectorXd q = Eigen::VectorXd::LinSpaced(model.dof(), 0.1, 0.7);
  for (auto _ : st) {
    Eigen::MatrixXd m = amp::mass_matrix(model, q);
    benchmark::DoNotOptimize(m.data());
  }
}
BENCHMARK(BM_MassMatrix);

void BM_EnvironmentStep(benchmark::State& st) {
  const amp::CharacterModel model = amp::CharacterModel::builtin("pointmass");
  const amp::MotionDataset data(model, {amp::generate_clip("gait", model, {})});
  amp::Environment env(model, data, amp::TaskSpec::defaults(amp::TaskKind::kHeading), {});
  amp::Rng rng(3);
  env.reset(rng);
  const Eigen::VectorXd action = Eigen::VectorXd::Constant(1, -0.3);
  for (auto _ : st) {
    if (env.step(action, rng).end != amp::EndKind::kNone) env.reset(rng);
    benchmark::DoNotOptimize(env.observation().data());
  }
}
BENCHMARK(BM_EnvironmentStep);

}  // namespace

BENCHMARK_MAIN();
