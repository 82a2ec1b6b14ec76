#include <benchmark/benchmark.h>

#include "specseg/fft.hpp"
#include "specseg/losses.hpp"
#include "specseg/metrics.hpp"
#include "specseg/network.hpp"
#include "specseg/random.hpp"
#include "specseg/synth.hpp"

using namespace specseg;

namespace {

Grid noise_grid(std::size_t h, std::size_t w) {
  SplitMix64 rng(7);
  Grid g(h, w);
  for (auto& v : g.values()) v = static_cast<float>(rng.uniform());
  return g;
}

SceneSample scene64() { return generate_scene(SceneConfig{}, 3); }

void BM_Fft2(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const FftPlan plan(n, n);
  const auto g = noise_grid(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(fft2(plan, g));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_Fft2)->Arg(64)->Arg(224)->Arg(97);

void BM_SpectralLoss(benchmark::State& state) {
  const auto s = scene64();
  const FftPlan plan(64, 64);
  const auto target = one_hot<float>(s.mask, 1);
  const auto pred = noise_grid(64, 64);
  for (auto _ : state) benchmark::DoNotOptimize(spectral_loss(pred, target, plan));
}
BENCHMARK(BM_SpectralLoss);

void BM_FinalLoss(benchmark::State& state) {
  const auto s = scene64();
  const FftPlan plan(64, 64);
  LossConfig cfg;
  cfg.lambda = static_cast<double>(state.range(0)) / 10.0;
  const Channels pred(3, Grid(64, 64, 1.0F / 3.0F));
  for (auto _ : state) benchmark::DoNotOptimize(final_loss(pred, s.mask, cfg, plan));
}
BENCHMARK(BM_FinalLoss)->Arg(0)->Arg(2);

void BM_Forward(benchmark::State& state) {
  const auto params = init_params<float>(NetSpec{}, 1);
  const auto s = scene64();
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, s.image));
}
BENCHMARK(BM_Forward);

void BM_ForwardBackward(benchmark::State& state) {
  const auto params = init_params<float>(NetSpec{}, 1);
  const auto s = scene64();
  const FftPlan plan(64, 64);
  const LossConfig cfg;
  for (auto _ : state) {
    const auto fwd = forward(params, s.image);
    const auto l = final_loss(fwd.probs, s.mask, cfg, plan);
    benchmark::DoNotOptimize(backward(params, fwd.cache, l.grad));
  }
}
BENCHMARK(BM_ForwardBackward);

void BM_Hd95(benchmark::State& state) {
  const auto a = generate_scene(SceneConfig{}, 1).mask;
  const auto b = generate_scene(SceneConfig{}, 2).mask;
  for (auto _ : state) benchmark::DoNotOptimize(hd95(a, b, 1));
}
BENCHMARK(BM_Hd95);

}  // namespace

BENCHMARK_MAIN();
