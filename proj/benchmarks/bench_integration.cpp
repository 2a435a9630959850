#include <benchmark/benchmark.h>

#include "entryexit/harness.hpp"
#include "entryexit/odeint.hpp"

using namespace entryexit;

namespace {

// eps in thousandths.
void BM_DetectExit(benchmark::State& st) {
  const auto sys = make_builtin("eps_coupled");
  const double eps = st.range(0) / 1000.0;
  std::size_t steps = 0;
  for (auto _ : st) {
    const auto d = detect_exit(sys, {-2, 1, 1}, eps);
    steps = d.trace.accepted;
    benchmark::DoNotOptimize(d.exit.x_event);
  }
  st.counters["accepted_steps"] = static_cast<double>(steps);
}
BENCHMARK(BM_DetectExit)->Arg(20)->Arg(10)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_IntegratePolar(benchmark::State& st) {
  const auto sys = make_builtin("nonlinear");
  for (auto _ : st) benchmark::DoNotOptimize(integrate_polar(sys, {-2, 0.7, 0.7}, 0.01, 1.0));
}
BENCHMARK(BM_IntegratePolar)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& st) {
  const auto sys = make_builtin("eps_coupled");
  const auto grid = open_grid(-2, -0.25, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(sweep(sys, grid, 0.01, {1, 1}));
}
BENCHMARK(BM_Sweep)->Arg(8)->Arg(36)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
