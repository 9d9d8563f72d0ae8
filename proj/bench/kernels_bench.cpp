// Serial reference kernels against their OpenMP counterparts.

#include "softnpg/kernels.hpp"
#include "softnpg/mdp.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace softnpg;

struct Fixture {
  TabularMdp mdp;
  Vector v;
  Matrix q;
  Matrix probs;

  explicit Fixture(int states, int actions)
      : mdp(random_mdp(states, actions, 0.9, 42)),
        v(Vector::LinSpaced(states, 0.0, 5.0)),
        q(Matrix::Random(states, actions)),
        probs(Policy::uniform(states, actions).probs()) {}
};

Fixture& fixture(int states) {
  static Fixture small(256, 8), large(4096, 8);
  return states <= 256 ? small : large;
}

template <bool Parallel>
void BM_BellmanBackup(benchmark::State& state) {
  Fixture& f = fixture(static_cast<int>(state.range(0)));
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::omp::bellman_backup(f.mdp.transition(), f.mdp.reward(), 0.9, f.v, out);
    else
      kernels::serial::bellman_backup(f.mdp.transition(), f.mdp.reward(), 0.9, f.v, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_SoftStateValues(benchmark::State& state) {
  Fixture& f = fixture(static_cast<int>(state.range(0)));
  Vector out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::omp::soft_state_values(f.q, 0.1, out);
    else
      kernels::serial::soft_state_values(f.q, 0.1, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_PolicyTransition(benchmark::State& state) {
  Fixture& f = fixture(static_cast<int>(state.range(0)));
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::omp::policy_transition(f.mdp.transition(), f.probs, out);
    else
      kernels::serial::policy_transition(f.mdp.transition(), f.probs, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_LogNormalizeRows(benchmark::State& state) {
  Fixture& f = fixture(static_cast<int>(state.range(0)));
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::omp::log_normalize_rows(f.q, out);
    else
      kernels::serial::log_normalize_rows(f.q, out);
    benchmark::DoNotOptimize(out.data());
  }
}

BENCHMARK_TEMPLATE(BM_BellmanBackup, false)->Arg(256)->Arg(4096);
BENCHMARK_TEMPLATE(BM_BellmanBackup, true)->Arg(256)->Arg(4096);
BENCHMARK_TEMPLATE(BM_SoftStateValues, false)->Arg(256)->Arg(4096);
BENCHMARK_TEMPLATE(BM_SoftStateValues, true)->Arg(256)->Arg(4096);
BENCHMARK_TEMPLATE(BM_PolicyTransition, false)->Arg(256)->Arg(4096);
BENCHMARK_TEMPLATE(BM_PolicyTransition, true)->Arg(256)->Arg(4096);
BENCHMARK_TEMPLATE(BM_LogNormalizeRows, false)->Arg(256)->Arg(4096);
BENCHMARK_TEMPLATE(BM_LogNormalizeRows, true)->Arg(256)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
