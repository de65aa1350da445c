#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "tdfb/filter_init.hpp"
#include "tdfb/frontend.hpp"
#include "tdfb/layers.hpp"
#include "tdfb/mel_reference.hpp"
#include "tdfb/signal_io.hpp"
#include "tdfb/train_toy.hpp"

namespace {

tdfb::Waveform noise(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  tdfb::Waveform w;
  w.samples.resize(n);
  for (double& v : w.samples) v = g(rng);
  return w;
}

void BM_Conv1d(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0))).samples;
  const tdfb::Matrix f = tdfb::init_gabor(tdfb::mel_grid()).filters;
  for (auto _ : state) benchmark::DoNotOptimize(tdfb::conv1d_forward(x, f));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Conv1d)->Arg(4000)->Arg(16000)->Arg(64000)->Unit(benchmark::kMillisecond);

void BM_FrontendForward(benchmark::State& state) {
  const tdfb::FrontendConfig c = state.range(0) == 0 ? tdfb::FrontendConfig::scattering()
                                                     : tdfb::FrontendConfig::gammatone();
  const tdfb::FilterParams p = tdfb::make_filter_params(c);
  const tdfb::Waveform w = noise(16000);
  for (auto _ : state) benchmark::DoNotOptimize(tdfb::frontend_forward(w, p, c));
}
BENCHMARK(BM_FrontendForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FrontendForwardBackward(benchmark::State& state) {
  const tdfb::FrontendConfig c = tdfb::FrontendConfig::gammatone(tdfb::InitScheme::rand);
  tdfb::FilterParams p = tdfb::make_filter_params(c, 3);
  const tdfb::Waveform w = noise(16000);
  tdfb::FrontendCache cache;
  for (auto _ : state) {
    const tdfb::FeatureMap f = tdfb::frontend_forward(w, p, c, &cache);
    tdfb::Matrix grad(f.channels(), f.frames(), 1e-3);
    tdfb::frontend_backward(grad, cache, p);
  }
}
BENCHMARK(BM_FrontendForwardBackward)->Unit(benchmark::kMillisecond);

void BM_LogMel(benchmark::State& state) {
  const tdfb::Waveform w = noise(16000);
  for (auto _ : state) benchmark::DoNotOptimize(tdfb::log_mel(w));
}
BENCHMARK(BM_LogMel)->Unit(benchmark::kMillisecond);

void BM_ToySynthesis(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(tdfb::synth_toy_example(seed % 4, seed++));
}
BENCHMARK(BM_ToySynthesis)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
