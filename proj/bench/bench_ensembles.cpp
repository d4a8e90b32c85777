// Serial reference against the OpenMP path for the main replica loops.

#include <vector>

#include <benchmark/benchmark.h>

#include "symbranch/duals.hpp"
#include "symbranch/exitlaw.hpp"
#include "symbranch/sbm_finite.hpp"
#include "symbranch/sbm_infinite.hpp"
#include "symbranch/voter.hpp"

namespace {

using namespace symbranch;

Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Exec::kSerial : Exec::kParallel;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}

void BM_SbmEnsemble(benchmark::State& state) {
  const auto g = build_torus(1, 8);
  const auto init = PairField::constant(8, 1.0, 1.0);
  SdeConfig cfg;
  cfg.gamma = 1.0;
  cfg.rho = -0.5;
  cfg.horizon = 0.5;
  cfg.replicas = 256;
  cfg.seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_ensemble(g, cfg, init, {}, exec_of(state)));
  }
  label(state);
}

void BM_TrotterEnsemble(benchmark::State& state) {
  const auto g = build_torus(1, 8);
  const auto params = ExitLawParams::make(-0.3);
  const HeatKernel kernel(g, 0.01);
  BoundaryField init;
  for (std::size_t k = 0; k < 8; ++k) init.push_back(BoundaryPoint::make(k % 2 ? Axis::kV : Axis::kU, 1.0));
  std::vector<BoundaryField> finals(512);
  for (auto _ : state) {
    for_each_index(finals.size(), exec_of(state), [&](std::size_t i) {
      Rng rng = make_stream(2, StreamTag::kTrotter, i);
      finals[i] = trotter_simulate(g, params, 0.01, 0.5, init, rng, {}, &kernel).final_state;
    });
    benchmark::DoNotOptimize(finals.data());
  }
  label(state);
}

void BM_MomentDual(benchmark::State& state) {
  const auto g = build_dumbbell(1.0);
  const PairField init{{1.0, 0.5}, {0.5, 1.0}};
  MomentDualConfig cfg;
  cfg.gamma = 1.0;
  cfg.rho = -0.5;
  cfg.t = 0.5;
  cfg.replicas = 20000;
  const std::vector<std::size_t> us{0};
  const std::vector<std::size_t> vs{1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(moment_dual_estimate(g, cfg, init, us, vs, exec_of(state)));
  }
  label(state);
}

void BM_VoterDual(benchmark::State& state) {
  const auto g = build_torus(1, 8);
  const OpinionField eta{1, 1, 1, 1, 0, 0, 0, 0};
  const std::vector<std::size_t> sites{3, 4};
  for (auto _ : state) {
    benchmark::DoNotOptimize(coalescing_dual_estimate(g, eta, sites, 1.0, 20000, 3, exec_of(state)));
  }
  label(state);
}

}  // namespace

BENCHMARK(BM_SbmEnsemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrotterEnsemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MomentDual)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VoterDual)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
