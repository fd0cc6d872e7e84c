#include <benchmark/benchmark.h>

#include <vector>

#include <qdyne/reconstruction.hpp>

using namespace qdyne;

namespace {

struct Fixture {
  SequenceConfig cfg;
  LocalOscillator lo = make_lo(1.51082e9, cfg.sequence_length_s);
  Sensor sensor{.resonance_hz = lo.frequency_hz() + 20000.5};
  std::vector<SignalField> signals{SignalField{6.5e-6, lo.frequency_hz() + 20000.5, 0.3}};
};

void BM_PopulationSeries(benchmark::State& state) {
  const Fixture f;
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(population_series(f.signals[0], f.sensor, f.cfg, f.lo, n, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PopulationSeries)->Arg(300000)->Arg(3000000)->Unit(benchmark::kMillisecond);

void BM_SamplePhotons(benchmark::State& state) {
  const Fixture f;
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<double> p = population_series(f.signals[0], f.sensor, f.cfg, f.lo, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_photons(p, f.sensor, 1, static_cast<unsigned>(state.range(1))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SamplePhotons)->Args({3000000, 1})->Args({3000000, 4})->Unit(benchmark::kMillisecond);

void BM_Fft(benchmark::State& state) {
  const Fixture f;
  const PhotonTrace t = simulate_trace(f.signals, f.sensor, f.cfg, f.lo, static_cast<std::size_t>(state.range(0)), 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(fft_trace(t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Fft)->Arg(300000)->Arg(3000000)->Unit(benchmark::kMillisecond);

void BM_FitPeak(benchmark::State& state) {
  const Fixture f;
  const Spectrum spec = fft_trace(simulate_trace(f.signals, f.sensor, f.cfg, f.lo, 300000, 1, 1));
  for (auto _ : state) benchmark::DoNotOptimize(fit_peak(spec, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_FitPeak)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_Reconstruct(benchmark::State& state) {
  const Fixture f;
  const PhotonTrace t = simulate_trace(f.signals, f.sensor, f.cfg, f.lo, 300000, 1, 1);
  const Spectrum spec = fft_trace(t);
  AnalysisOptions o;
  o.sign = 1;
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct(t, spec, o));
}
BENCHMARK(BM_Reconstruct)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
