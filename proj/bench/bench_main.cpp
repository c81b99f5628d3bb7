#include <benchmark/benchmark.h>

#include "whardy/evolution.hpp"
#include "whardy/spectral.hpp"

using namespace whardy;

namespace {

const WeightFamily& family() {
  static const WeightFamily f = WeightFamily::exp_power(3, 1.0, 2.0);
  return f;
}

SpectralProblem problem(int n) { return {family(), 0.25, RadialGrid(1e-10, 20.0, n)}; }

void BM_AssembleSerial(benchmark::State& state) {
  const auto p = problem(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_serial(p));
}

void BM_AssembleParallel(benchmark::State& state) {
  const auto p = problem(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble(p));
}

void BM_OperatorSerial(benchmark::State& state) {
  const RadialGrid g(1e-9, 6.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_evolution_operator_serial(family(), g));
}

void BM_OperatorParallel(benchmark::State& state) {
  const RadialGrid g(1e-9, 6.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_evolution_operator(family(), g));
}

// four caps, 200 implicit steps each
struct CapsFixture {
  EvolutionOperator op = build_evolution_operator_serial(family(), RadialGrid(1e-9, 6.0, 1200));
  RadialTestFunction u0 = shell_bump(0.25, 1.0);
  std::vector<double> caps{1e5, 1e6, 1e7, 1e8};
};

void BM_CapsSerial(benchmark::State& state) {
  static const CapsFixture fx;
  for (auto _ : state) benchmark::DoNotOptimize(run_caps_serial(fx.op, 0.2, fx.caps, fx.u0.value, 0.2, 1e-3));
}

void BM_CapsParallel(benchmark::State& state) {
  static const CapsFixture fx;
  for (auto _ : state) benchmark::DoNotOptimize(run_caps(fx.op, 0.2, fx.caps, fx.u0.value, 0.2, 1e-3));
}

}  // namespace

BENCHMARK(BM_AssembleSerial)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleParallel)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OperatorSerial)->Arg(1200)->Arg(4800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OperatorParallel)->Arg(1200)->Arg(4800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CapsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CapsParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
