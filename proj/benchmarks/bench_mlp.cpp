#include <benchmark/benchmark.h>

#include "amp/mlp.hpp"
#include "amp/rng.hpp"

namespace {

amp::Mlp make_net(int in, int width) {
  amp::Rng rng(7);
  return amp::Mlp(amp::MlpSpec{in, {width, width / 2}, 1}, rng);
}

void BM_ForwardSingle(benchmark::State& st) {
  const amp::Mlp net = make_net(26, static_cast<int>(st.range(0)));
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(26, -1.0, 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(net.forward_scalar(x));
}
BENCHMARK(BM_ForwardSingle)->Arg(64)->Arg(256);

void BM_BackwardBatch(benchmark::State& st) {
  const amp::Mlp net = make_net(26, static_cast<int>(st.range(0)));
  amp::Rng rng(1);
  Eigen::MatrixXd x(26, 256);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = amp::standard_normal(rng);
  amp::MlpParams grads = amp::MlpParams::zeros(net.spec());
  for (auto _ : st) {
    amp::MlpCache cache;
    const Eigen::MatrixXd y = net.forward_batch(x, cache);
    net.backward(cache, Eigen::MatrixXd::Ones(1, x.cols()), grads);
    benchmark::DoNotOptimize(grads.weights[0].data());
  }
  st.SetItemsProcessed(st.iterations() * x.cols());
}
BENCHMARK(BM_BackwardBatch)->Arg(64)->Arg(256);

void BM_InputGradNormSq(benchmark::State& st) {
  const amp::Mlp net = make_net(26, static_cast<int>(st.range(0)));
  amp::Rng rng(2);
  Eigen::MatrixXd x(26, 256);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = amp::standard_normal(rng);
  amp::MlpParams grads = amp::MlpParams::zeros(net.spec());
  for (auto _ : st) benchmark::DoNotOptimize(net.input_grad_norm_sq(x, &grads));
  st.SetItemsProcessed(st.iterations() * x.cols());
}
BENCHMARK(BM_InputGradNormSq)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
