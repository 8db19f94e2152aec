#include <benchmark/benchmark.h>

#include <vector>

#include "normclash/gemm.hpp"
#include "normclash/geometry.hpp"
#include "normclash/model.hpp"
#include "normclash/rng.hpp"
#include "normclash/tape.hpp"

using namespace normclash;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  std::vector<double> v(n);
  for (auto& x : v) x = uniform01(rng) - 0.5;
  return v;
}

// Batch x 784 times 784 x 256, the first layer of the desk MLP.
void BM_Gemm(benchmark::State& state) {
  const std::size_t m = state.range(0), k = 784, n = 256;
  const auto a = random_vector(m * k, 1);
  const auto b = random_vector(k * n, 2);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    kernels::gemm(a, b, c, m, k, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * k * n));
}
BENCHMARK(BM_Gemm)->Arg(1)->Arg(32)->Arg(128);

// Forward plus backward of the mean cross-entropy w.r.t. parameters and input.
void BM_TrainingStepGradient(benchmark::State& state) {
  const std::size_t batch = state.range(0);
  const ModelParams params = init_params(ModelSpec{{784, 256, 10}}, 3);
  Tensor x({batch, 784}, random_vector(batch * 784, 4));
  std::vector<int> labels(batch);
  for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % 10);
  for (auto _ : state) {
    Tape tape;
    Var in = tape.borrow(x, true);
    std::vector<Var> pv;
    Var loss = tape.softmax_cross_entropy(forward(tape, params, in, true, &pv), labels);
    auto g = tape.backward(loss);
    benchmark::DoNotOptimize(g.at(pv[0]).data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_TrainingStepGradient)->Arg(32)->Arg(128);

void BM_MonteCarloIntersection(benchmark::State& state) {
  const std::size_t d = state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(geometry::monte_carlo_intersection(d, 100000, 5).hits);
  }
  state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_MonteCarloIntersection)->Arg(2)->Arg(784);

}  // namespace

BENCHMARK_MAIN();
