// Serial reference kernels against their OpenMP versions.
//
//   tokspace_bench --benchmark_filter=Marginal
//
// Thread count follows OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include <string>

#include "tokspace/exact.hpp"
#include "tokspace/mdd.hpp"
#include "tokspace/models.hpp"
#include "tokspace/qa.hpp"
#include "tokspace/rng.hpp"
#include "tokspace/sampler.hpp"
#include "tokspace/vocab.hpp"

namespace {

using namespace tokspace;

struct Fixture {
  Vocabulary vocab;
  RandomTableModel model;

  Fixture()
      : vocab(load_tables(TOKSPACE_FIXTURES "/toy.json").vocab),
        model(vocab.size(), 11, 1.5) {}
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

std::string repeat_abc(int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += "abc";
  return s;
}

template <bool Parallel>
void BM_ExactMarginal(benchmark::State& state) {
  const auto& f = fixture();
  const Mdd mdd = compile_mdd(repeat_abc(static_cast<int>(state.range(0))), f.vocab);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? exact_marginal(f.model, mdd)
                                      : exact_marginal_serial(f.model, mdd));
  }
  state.counters["paths"] =
      static_cast<double>(path_counts(mdd).front().convert_to<double>());
}
BENCHMARK(BM_ExactMarginal<false>)->Name("ExactMarginal/serial")->Arg(4)->Arg(6)
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExactMarginal<true>)->Name("ExactMarginal/parallel")->Arg(4)->Arg(6)
    ->Unit(benchmark::kMillisecond);

template <bool Parallel>
void BM_EstimateMarginal(benchmark::State& state) {
  const auto& f = fixture();
  const Mdd mdd = compile_mdd(repeat_abc(16), f.vocab);
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? estimate_marginal(f.model, mdd, n, 5)
                                      : estimate_marginal_serial(f.model, mdd, n, 5));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_EstimateMarginal<false>)->Name("EstimateMarginal/serial")
    ->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateMarginal<true>)->Name("EstimateMarginal/parallel")
    ->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);

SamplePools synthetic_pools(std::size_t examples, std::size_t choices,
                            std::size_t pool, std::vector<int>& labels) {
  CounterRng rng(3, 0);
  SamplePools pools(examples);
  labels.assign(examples, 0);
  for (std::size_t e = 0; e < examples; ++e) {
    labels[e] = static_cast<int>(e % choices);
    pools[e].resize(choices);
    for (auto& c : pools[e]) {
      c.resize(pool);
      for (auto& w : c) w = -10.0 * rng.uniform();
    }
  }
  return pools;
}

template <bool Parallel>
void BM_TuneSamples(benchmark::State& state) {
  std::vector<int> labels;
  const auto pools = synthetic_pools(64, 4, 128, labels);
  const std::vector<std::size_t> grid{1, 2, 4, 8, 16, 32, 64, 128};
  const auto trials = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        Parallel ? tune_samples(pools, labels, grid, trials, 9)
                 : tune_samples_serial(pools, labels, grid, trials, 9));
  }
}
BENCHMARK(BM_TuneSamples<false>)->Name("TuneSamples/serial")->Arg(64)
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TuneSamples<true>)->Name("TuneSamples/parallel")->Arg(64)
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
