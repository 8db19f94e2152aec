#include <benchmark/benchmark.h>

#include "normclash/attacks.hpp"
#include "normclash/dataset.hpp"
#include "normclash/model.hpp"

using namespace normclash;

namespace {

struct Problem {
  ModelParams params = init_params(ModelSpec{{784, 256, 10}}, 7);
  Dataset data = make_blobs(100, 784, 10, 0.1, 8);
};

const Problem& problem() {
  static const Problem p;
  return p;
}

// PGD-20 over 100 samples; range(1) is the EOT draw count under gaussian noise.
void BM_Pgd(benchmark::State& state) {
  const auto& p = problem();
  auto spec = AttackSpec::pgd(state.range(0) ? Norm::l2 : Norm::linf, state.range(0) ? 1.36 : 0.1, 20);
  spec.eot_samples = state.range(1);
  const NoiseSpec noise = state.range(1) > 1 ? NoiseSpec::gaussian(0.25) : NoiseSpec::none();
  for (auto _ : state) {
    auto r = pgd_attack(p.params, noise, p.data.inputs, p.data.labels, spec, {1, 0});
    benchmark::DoNotOptimize(r.adversarial.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.data.size()));
}
BENCHMARK(BM_Pgd)->Args({0, 1})->Args({1, 1})->Args({0, 10})->Unit(benchmark::kMillisecond);

void BM_CarliniWagner(benchmark::State& state) {
  const auto& p = problem();
  auto spec = AttackSpec::cw(state.range(0));
  spec.search_steps = 3;
  for (auto _ : state) {
    auto r = cw_attack(p.params, NoiseSpec::none(), p.data.inputs, p.data.labels, spec, {1, 0});
    benchmark::DoNotOptimize(r.adversarial.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.data.size()));
}
BENCHMARK(BM_CarliniWagner)->Arg(20)->Arg(60)->Unit(benchmark::kMillisecond);

}  // namespace
