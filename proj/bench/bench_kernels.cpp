// Parallel kernels against their serial reference versions.

#include <benchmark/benchmark.h>

#include <random>

#include "efenet/kernels.hpp"

using namespace efenet;
namespace k = efenet::kernels;

namespace {

Tensor random_tensor(int c, int h, int w, float lo, float hi, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor t(c, h, w);
  for (float& v : t.span()) v = u(rng);
  return t;
}

struct ConvCase {
  Tensor x;
  std::vector<float> w, b;
  k::ConvGeom g;
};

ConvCase conv_case(const benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const int cin = static_cast<int>(state.range(1)), cout = static_cast<int>(state.range(2));
  ConvCase c{random_tensor(cin, size, size, -1.f, 1.f, 1), {}, {}, {cin, cout, 3, 1, 1}};
  const Tensor w = random_tensor(1, 1, c.g.weight_count(), -0.1f, 0.1f, 2);
  c.w.assign(w.span().begin(), w.span().end());
  c.b.assign(static_cast<std::size_t>(cout), 0.01f);
  return c;
}

void conv_args(benchmark::internal::Benchmark* b) {
  b->Args({32, 16, 16})->Args({64, 32, 32})->Args({128, 6, 16})->Unit(benchmark::kMillisecond);
}

void BM_Conv2dParallel(benchmark::State& state) {
  const ConvCase c = conv_case(state);
  Tensor y;
  for (auto _ : state) {
    k::conv2d_forward(c.x, c.w, c.b, c.g, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Conv2dParallel)->Apply(conv_args);

void BM_Conv2dReference(benchmark::State& state) {
  const ConvCase c = conv_case(state);
  Tensor y;
  for (auto _ : state) {
    k::reference::conv2d_forward(c.x, c.w, c.b, c.g, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Conv2dReference)->Apply(conv_args);

void BM_Conv2dBackwardParallel(benchmark::State& state) {
  const ConvCase c = conv_case(state);
  Tensor y;
  k::conv2d_forward(c.x, c.w, c.b, c.g, y);
  Tensor dx(c.x.shape());
  std::vector<float> dw(c.w.size()), db(c.b.size());
  for (auto _ : state) {
    k::conv2d_backward(c.x, c.w, y, c.g, &dx, dw, db);
    benchmark::DoNotOptimize(dx.data());
  }
}
BENCHMARK(BM_Conv2dBackwardParallel)->Apply(conv_args);

void BM_Conv2dBackwardReference(benchmark::State& state) {
  const ConvCase c = conv_case(state);
  Tensor y;
  k::conv2d_forward(c.x, c.w, c.b, c.g, y);
  Tensor dx(c.x.shape());
  std::vector<float> dw(c.w.size()), db(c.b.size());
  for (auto _ : state) {
    k::reference::conv2d_backward(c.x, c.w, y, c.g, &dx, dw, db);
    benchmark::DoNotOptimize(dx.data());
  }
}
BENCHMARK(BM_Conv2dBackwardReference)->Apply(conv_args);

void BM_WarpParallel(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Tensor src = random_tensor(3, size, size, 0.f, 1.f, 3);
  const Tensor flow = random_tensor(2, size, size, -4.f, 4.f, 4);
  Tensor out;
  for (auto _ : state) {
    k::warp_forward(src, flow, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_WarpParallel)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_WarpReference(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Tensor src = random_tensor(3, size, size, 0.f, 1.f, 3);
  const Tensor flow = random_tensor(2, size, size, -4.f, 4.f, 4);
  Tensor out;
  for (auto _ : state) {
    k::reference::warp_forward(src, flow, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_WarpReference)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_BicubicUpParallel(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Tensor src = random_tensor(3, size, size, 0.f, 1.f, 5);
  for (auto _ : state) benchmark::DoNotOptimize(k::resample_bicubic(src, 4 * size, 4 * size, 4.0));
}
BENCHMARK(BM_BicubicUpParallel)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_BicubicUpReference(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Tensor src = random_tensor(3, size, size, 0.f, 1.f, 5);
  for (auto _ : state) benchmark::DoNotOptimize(k::reference::resample_bicubic(src, 4 * size, 4 * size, 4.0));
}
BENCHMARK(BM_BicubicUpReference)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
