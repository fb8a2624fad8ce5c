#include <benchmark/benchmark.h>

#include <random>

#include "rim/conv.hpp"
#include "rim/fft.hpp"
#include "rim/phantom.hpp"
#include "rim/sampling.hpp"
#include "rim/wavelet.hpp"

namespace {

rim::Tensor noise(std::vector<std::size_t> shape, unsigned seed) {
  rim::Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  for (auto& v : t.data()) v = n(rng);
  return t;
}

// args: size, in channels, out channels, kernel side
void BM_Conv2d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ci = static_cast<std::size_t>(state.range(1));
  const auto co = static_cast<std::size_t>(state.range(2));
  const auto k = static_cast<std::size_t>(state.range(3));
  const auto x = noise({ci, n, n}, 1);
  const auto w = noise({co, ci, k, k}, 2);
  const rim::Tensor b({co});
  for (auto _ : state) benchmark::DoNotOptimize(rim::conv2d(x, w, b));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n * ci * co * k * k));
}
BENCHMARK(BM_Conv2d)->Args({64, 4, 16, 5})->Args({64, 16, 16, 3})->Args({64, 64, 64, 3})->Args({128, 64, 64, 3});

void BM_Conv2dBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto f = static_cast<std::size_t>(state.range(1));
  const auto x = noise({f, n, n}, 1);
  const auto g = noise({f, n, n}, 3);
  const auto w = noise({f, f, 3, 3}, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rim::conv2d_transpose(g, w));
    benchmark::DoNotOptimize(rim::conv2d_kernel_grad(x, g, 3, 3));
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({64, 16})->Args({64, 64});

void BM_Fft2(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto img = rim::gen_phantom(rim::PhantomKind::Textured, n, 0);
  for (auto _ : state) benchmark::DoNotOptimize(rim::fft2_centered(img));
}
BENCHMARK(BM_Fft2)->RangeMultiplier(2)->Range(32, 256);

void BM_GaussianMask(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(rim::gaussian_mask(n, n, 4.0, seed++));
}
BENCHMARK(BM_GaussianMask)->Arg(64)->Arg(256);

}  // namespace

namespace {

void BM_Wavelet(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto img = rim::gen_phantom(rim::PhantomKind::Textured, n, 0);
  for (auto _ : state) benchmark::DoNotOptimize(rim::idwt2(rim::dwt2(img, 3), 3, n, n));
}
BENCHMARK(BM_Wavelet)->Arg(64)->Arg(256);

}  // namespace
