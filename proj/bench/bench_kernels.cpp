// Parallel kernels against the serial reference, plus one training step of
// the default backbone. Thread count follows HRCAM_THREADS.

#include <benchmark/benchmark.h>

#include <random>

#include "hrcam/network.hpp"
#include "hrcam/ops.hpp"
#include "hrcam/parallel.hpp"
#include "hrcam/reference.hpp"

using namespace hrcam;

namespace {

Tensor<float> random_tensor(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Tensor<float> t(shape);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// Shapes of the three default stages at batch 16: (channels, extent).
constexpr std::array<std::array<std::size_t, 2>, 3> kStages{{{16, 64}, {32, 32}, {64, 16}}};

void BM_ConvForward(benchmark::State& state) {
  const auto [c, n] = kStages[static_cast<std::size_t>(state.range(0))];
  const auto x = random_tensor({16, c, n, n}, 1);
  const auto k = random_tensor({c, c, 3, 3}, 2);
  const auto b = random_tensor({c}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d_forward(x, k, b, {1, 1}));
  state.SetItemsProcessed(state.iterations() * 16);
}

void BM_ConvForwardReference(benchmark::State& state) {
  const auto [c, n] = kStages[static_cast<std::size_t>(state.range(0))];
  const auto x = random_tensor({16, c, n, n}, 1);
  const auto k = random_tensor({c, c, 3, 3}, 2);
  const auto b = random_tensor({c}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(reference::conv2d_forward(x, k, b, {1, 1}));
  state.SetItemsProcessed(state.iterations() * 16);
}

void BM_ConvBackward(benchmark::State& state) {
  const auto [c, n] = kStages[static_cast<std::size_t>(state.range(0))];
  const auto x = random_tensor({16, c, n, n}, 1);
  const auto k = random_tensor({c, c, 3, 3}, 2);
  const auto b = random_tensor({c}, 3);
  ops::Conv2dCache<float> cache;
  const auto y = ops::conv2d_forward(x, k, b, {1, 1}, &cache);
  const auto g = random_tensor(y.shape(), 4);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d_backward(cache, g));
  state.SetItemsProcessed(state.iterations() * 16);
}

void BM_ConvBackwardReference(benchmark::State& state) {
  const auto [c, n] = kStages[static_cast<std::size_t>(state.range(0))];
  const auto x = random_tensor({16, c, n, n}, 1);
  const auto k = random_tensor({c, c, 3, 3}, 2);
  const auto b = random_tensor({c}, 3);
  const auto y = ops::conv2d_forward(x, k, b, {1, 1});
  const auto g = random_tensor(y.shape(), 4);
  for (auto _ : state) benchmark::DoNotOptimize(reference::conv2d_backward(x, k, g, {1, 1}));
  state.SetItemsProcessed(state.iterations() * 16);
}

void BM_MaxPool(benchmark::State& state) {
  const auto x = random_tensor({16, 16, 64, 64}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(ops::maxpool_forward(x));
}

void BM_MaxPoolReference(benchmark::State& state) {
  const auto x = random_tensor({16, 16, 64, 64}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(reference::maxpool_forward(x));
}

void BM_Bilinear(benchmark::State& state) {
  const auto x = random_tensor({1, 64, 16, 16}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(ops::bilinear_upsample(x, 64, 64));
}

void BM_BilinearReference(benchmark::State& state) {
  const auto x = random_tensor({1, 64, 16, 16}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(reference::bilinear_upsample(x, 64, 64));
}

void BM_BackboneStep(benchmark::State& state) {
  const ModelSpec spec = ModelSpec::desk_default();
  const auto built = build_model<float>(spec, 1);
  const auto x = random_tensor({16, 1, 64, 64}, 7);
  Tensor<float> g({16, 2}, 0.01f);
  for (auto _ : state) {
    ForwardTrace<float> trace;
    forward(built.params, spec, x, &trace);
    benchmark::DoNotOptimize(backward(built.params, spec, trace, g));
  }
  state.SetItemsProcessed(state.iterations() * 16);
}

}  // namespace

BENCHMARK(BM_ConvForward)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForwardReference)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardReference)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxPool)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxPoolReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bilinear)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BilinearReference)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BackboneStep)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  configure_threads();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
