#include <benchmark/benchmark.h>

#include "entryexit/entry_exit.hpp"
#include "entryexit/polar.hpp"
#include "entryexit/spectral.hpp"

using namespace entryexit;

namespace {

const char* const kNames[] = {"one_way_coupled", "eps_coupled", "nonlinear"};

void BM_SpectralProfile(benchmark::State& st) {
  const auto sys = make_builtin(kNames[st.range(0)]);
  for (auto _ : st) benchmark::DoNotOptimize(spectral_profile(sys));
  st.SetLabel(kNames[st.range(0)]);
}
BENCHMARK(BM_SpectralProfile)->DenseRange(0, 2);

void BM_PolarAnalysis(benchmark::State& st) {
  const auto sys = make_builtin(kNames[st.range(0)]);
  const auto prof = spectral_profile(sys);
  for (auto _ : st) benchmark::DoNotOptimize(analyze_polar(sys, prof));
  st.SetLabel(kNames[st.range(0)]);
}
BENCHMARK(BM_PolarAnalysis)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

// Prediction only, with the analysis done once (the sweep path).
void BM_PredictExit(benchmark::State& st) {
  const auto sys = make_builtin(kNames[st.range(0)]);
  auto prof = spectral_profile(sys);
  const auto pol = analyze_polar(sys, prof);
  prof.theta_star = pol.theta_star;
  for (auto _ : st) benchmark::DoNotOptimize(predict_exit(sys, prof, pol, -1.7));
  st.SetLabel(kNames[st.range(0)]);
}
BENCHMARK(BM_PredictExit)->DenseRange(0, 2);

void BM_Phi(benchmark::State& st) {
  const auto sys = make_builtin("eps_coupled");
  double t = 0.1;
  for (auto _ : st) {
    benchmark::DoNotOptimize(phi(sys, -0.5, t, 0.01));
    t += 1e-9;
  }
}
BENCHMARK(BM_Phi);

}  // namespace

BENCHMARK_MAIN();
