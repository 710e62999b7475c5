// Serial reference vs OpenMP kernels: Sobel energy map and corpus extraction.
#include <benchmark/benchmark.h>

#include "importance/features.hpp"
#include "importance/image.hpp"
#include "synthetic.hpp"

using namespace importance;

namespace {

GrayImage noise_image(int side) {
  GrayImage img(side, side);
  std::uint64_t rng = 1;
  for (auto& p : img.pixels) p = static_cast<double>(synth::next(rng) % 256);
  return img;
}

const synth::World& world() {
  static const synth::World w = [] {
    synth::Options opts;
    opts.images = 200;
    opts.width = 640;
    opts.height = 480;
    return synth::make_world(opts);
  }();
  return w;
}

void BM_EnergyMapSerial(benchmark::State& state) {
  const auto img = noise_image(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::gradient_energy_map(img, EnergyMode::Squared));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.pixels.size()));
}

void BM_EnergyMapParallel(benchmark::State& state) {
  const auto img = noise_image(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gradient_energy_map(img, EnergyMode::Squared));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.pixels.size()));
}

void BM_ExtractSerial(benchmark::State& state) {
  const auto& w = world();
  const auto source = synth::memory_source(w.pixels);
  for (auto _ : state) benchmark::DoNotOptimize(reference::extract_corpus(w.corpus, {}, source));
}

void BM_ExtractParallel(benchmark::State& state) {
  const auto& w = world();
  const auto source = synth::memory_source(w.pixels);
  for (auto _ : state) benchmark::DoNotOptimize(extract_corpus(w.corpus, {}, source));
}

}  // namespace

BENCHMARK(BM_EnergyMapSerial)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EnergyMapParallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ExtractSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtractParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
