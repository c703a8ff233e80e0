#include <benchmark/benchmark.h>

#include "qfuse/estimation.hpp"
#include "qfuse/fusion.hpp"
#include "qfuse/qmath.hpp"
#include "qfuse/rng.hpp"

namespace {

using namespace qfuse;

Observable random_observable(SplitMix64& rng) {
  return Observable{BlochState(rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi))};
}

// A representative fitted observable set for the solve benchmarks.
ObservableSet bench_observables() {
  ObservableSet set;
  set.g = BlochState(1.5707963, 0.0);
  set.obs_l = Observable{BlochState(0.4, 0.9)};
  set.obs_v = Observable{BlochState(1.1, 2.3)};
  set.obs_a = Observable{BlochState(2.0, 4.4)};
  return set;
}

void BM_PovmProbability(benchmark::State& state) {
  SplitMix64 rng(1);
  const Observable obs = random_observable(rng);
  const PovmPair effects = povm_effects(obs, 0.3);
  const Ket2 psi = state_from_angles(BlochState(1.234, 0.567));
  for (auto _ : state) {
    benchmark::DoNotOptimize(povm_probability(psi, effects.e_plus));
  }
}
BENCHMARK(BM_PovmProbability);

void BM_QuantumCorrelation(benchmark::State& state) {
  SplitMix64 rng(2);
  const Observable a = random_observable(rng);
  const Observable b = random_observable(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(quantum_correlation(a, b));
  }
}
BENCHMARK(BM_QuantumCorrelation);

void BM_UtteranceSolve(benchmark::State& state) {
  const ObservableSet set = bench_observables();
  const SampleProbs probs{0.81, 0.34, 0.62};
  SolverConfig cfg = default_utterance_fit_config();
  cfg.n_restarts = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_utterance_state(probs, set, cfg));
  }
}
BENCHMARK(BM_UtteranceSolve)->Arg(10)->Arg(50)->Arg(200);

void BM_ObservableFit(benchmark::State& state) {
  TrainingStats stats;
  stats.pos_rate = 0.55;
  stats.modality_pos_rate = {0.52, 0.49, 0.51};
  stats.pairwise_corr = {0.42, 0.31, 0.28};
  stats.n_samples = 2000;
  SolverConfig cfg = default_observable_fit_config();
  cfg.n_restarts = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_observables(stats, cfg));
  }
}
BENCHMARK(BM_ObservableFit)->Arg(10)->Arg(50);

void BM_GridOracle(benchmark::State& state) {
  const ObservableSet set = bench_observables();
  const ResidualSystem sys = make_utterance_system(SampleProbs{0.81, 0.34, 0.62}, set);
  for (auto _ : state) {
    benchmark::DoNotOptimize(grid_oracle(sys, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_GridOracle)->Arg(21)->Arg(61);

}  // namespace

BENCHMARK_MAIN();
