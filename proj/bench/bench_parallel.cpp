#include <benchmark/benchmark.h>

#include "flab/certificates.hpp"
#include "flab/stochastic.hpp"

using namespace flab;

namespace {

const BFunction kSG = BFunction::scharfetter_gummel();

void BM_Simulate(benchmark::State& state) {
  const Exec exec = state.range(0) ? Exec::parallel : Exec::serial;
  const Potential u = Potential::quadratic(0.5);
  const Lattice lat = auto_lattice(u, 0.2, 40.0, 4.0);
  const RateField r = build_rates(u, kSG, lat);
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(r, lat, 0, 10.0, 20000, 42, exec));
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(BM_Simulate)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond);

void BM_LyapunovScan(benchmark::State& state) {
  const Exec exec = state.range(0) ? Exec::parallel : Exec::serial;
  const Potential u = Potential::quadratic(0.5);
  const Lattice lat = Lattice::make(0.01, 1600);
  const RateField r = build_rates(u, kSG, lat);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lyapunov_certificate(u, kSG, r, lat, exec));
  }
}
BENCHMARK(BM_LyapunovScan)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
