#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rim/error.hpp"
#include "rim/fft.hpp"
#include "rim/mri_model.hpp"
#include "rim/sampling.hpp"

using namespace rim;

namespace {

CoilSet random_coils(std::size_t h, std::size_t w, std::size_t c, std::mt19937_64& rng) {
  CoilSet s;
  for (std::size_t i = 0; i < c; ++i) s.sensitivities.push_back(oracle::random_image(h, w, rng));
  return s;
}

SamplingMask random_mask(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  SamplingMask m = SamplingMask::full(h, w);
  std::bernoulli_distribution keep(0.4);
  for (auto& p : m.pattern) p = keep(rng) ? 1 : 0;
  return m;
}

}  // namespace

TEST_CASE("forward_op matches a loop oracle and zeroes unsampled positions") {
  std::mt19937_64 rng(21);
  const auto coils = random_coils(6, 5, 3, rng);
  const auto mask = random_mask(6, 5, rng);
  const auto x = oracle::random_image(6, 5, rng);
  const auto y = forward_op(x, coils, mask);
  REQUIRE(y.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    ComplexImage sx(6, 5);
    for (std::size_t p = 0; p < sx.size(); ++p) sx[p] = coils.sensitivities[i][p] * x[p];
    const auto k = oracle::dft2(sx);
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 5; ++c) {
        if (mask(r, c)) {
          CHECK(std::abs(y[i](r, c) - k(r, c)) < 1e-10);
        } else {
          CHECK(y[i](r, c) == cdouble{});
        }
      }
  }
}

TEST_CASE("adjoint identity <Ax, y> = <x, A^H y>") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t h = 4 + rng() % 13, w = 4 + rng() % 13, c = 1 + rng() % 4;
    const auto coils = random_coils(h, w, c, rng);
    const auto mask = random_mask(h, w, rng);
    const auto x = oracle::random_image(h, w, rng);
    CoilData y;
    for (std::size_t i = 0; i < c; ++i) y.push_back(oracle::random_image(h, w, rng));
    const auto ax = forward_op(x, coils, mask);
    cdouble lhs = 0.0;
    for (std::size_t i = 0; i < c; ++i) lhs += inner(ax[i], y[i]);
    const cdouble rhs = inner(x, adjoint_op(y, coils, mask));
    CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-12);
  }
}

TEST_CASE("normal_op equals adjoint of forward") {
  std::mt19937_64 rng(23);
  const auto coils = random_coils(8, 8, 2, rng);
  const auto mask = random_mask(8, 8, rng);
  const auto x = oracle::random_image(8, 8, rng);
  const auto a = normal_op(x, coils, mask);
  const auto b = adjoint_op(forward_op(x, coils, mask), coils, mask);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
}

TEST_CASE("loglik_gradient is half the derivative of the data term") {
  std::mt19937_64 rng(24);
  auto coils = random_coils(5, 6, 2, rng);
  const auto mask = random_mask(5, 6, rng);
  const auto truth = oracle::random_image(5, 6, rng);
  coils.measurements = forward_op(truth, coils, mask);
  for (auto& m : *coils.measurements) m = m + oracle::random_image(5, 6, rng) * cdouble(0.1);
  const auto x = oracle::random_image(5, 6, rng);
  const double sigma = 0.7;
  const auto g = loglik_gradient(x, coils, mask, sigma);
  const double h = 1e-6;
  double worst = 0.0, scale = 0.0;
  for (std::size_t p = 0; p < x.size(); ++p) scale = std::max(scale, std::abs(g[p]));
  for (std::size_t p = 0; p < x.size(); ++p) {
    for (cdouble dir : {cdouble(1, 0), cdouble(0, 1)}) {
      auto up = x, down = x;
      up[p] += h * dir;
      down[p] -= h * dir;
      const double fd = (data_fidelity(up, coils, mask, sigma) - data_fidelity(down, coils, mask, sigma)) / (2 * h);
      const double an = 2.0 * (dir.real() * g[p].real() + dir.imag() * g[p].imag());
      worst = std::max(worst, std::abs(fd - an) / (2 * scale));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("loglik_gradient contracts") {
  std::mt19937_64 rng(25);
  auto coils = random_coils(4, 4, 1, rng);
  const auto mask = SamplingMask::full(4, 4);
  const auto x = oracle::random_image(4, 4, rng);
  CHECK_THROWS_AS(loglik_gradient(x, coils, mask, 1.0), Error);
  coils.measurements = forward_op(x, coils, mask);
  CHECK_THROWS_AS(loglik_gradient(x, coils, mask, 0.0), Error);
  // exact data gives a zero gradient
  const auto g = loglik_gradient(x, coils, mask, 1.0);
  for (const auto& v : g.data()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("shape mismatches are rejected") {
  std::mt19937_64 rng(26);
  const auto coils = random_coils(4, 4, 2, rng);
  CHECK_THROWS_AS(forward_op(oracle::random_image(4, 5, rng), coils, SamplingMask::full(4, 4)), Error);
  CHECK_THROWS_AS(forward_op(oracle::random_image(4, 4, rng), coils, SamplingMask::full(4, 5)), Error);
}

TEST_CASE("synthetic sensitivities are normalized and deterministic") {
  const auto a = synth_sensitivities(32, 24, 4, 5);
  const auto b = synth_sensitivities(32, 24, 4, 5);
  REQUIRE(a.coil_count() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.sensitivities[i] == b.sensitivities[i]);
  for (std::size_t p = 0; p < 32 * 24; ++p) {
    double s = 0.0;
    for (const auto& c : a.sensitivities) s += std::norm(c[p]);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_FALSE(synth_sensitivities(32, 24, 4, 6).sensitivities[0] == a.sensitivities[0]);
}

TEST_CASE("fully sampled noise-free adjoint reproduces the image") {
  std::mt19937_64 rng(27);
  const auto x = oracle::random_image(16, 16, rng);
  const auto sens = synth_sensitivities(16, 16, 3, 1);
  const auto mask = SamplingMask::full(16, 16);
  const auto coils = acquire(x, sens.sensitivities, mask);
  const auto back = adjoint_op(*coils.measurements, coils, mask);
  for (std::size_t p = 0; p < x.size(); ++p) CHECK(std::abs(back[p] - x[p]) < 1e-12);
}

TEST_CASE("noise lands only on sampled positions with the requested spread") {
  std::mt19937_64 rng(28);
  const std::size_t n = 64;
  SamplingMask mask = random_mask(n, n, rng);
  const CoilData zero(2, ComplexImage(n, n));
  const auto noisy = add_noise(zero, mask, {0.3, 9});
  CHECK(add_noise(zero, mask, {0.3, 9}) == noisy);
  double sum2 = 0.0;
  std::size_t count = 0;
  for (const auto& c : noisy)
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t col = 0; col < n; ++col) {
        if (!mask(r, col)) {
          CHECK(c(r, col) == cdouble{});
        } else {
          sum2 += std::norm(c(r, col));
          count += 2;
        }
      }
  CHECK(std::sqrt(sum2 / static_cast<double>(count)) == doctest::Approx(0.3).epsilon(0.05));
  CHECK(add_noise(zero, mask, {0.0, 9}) == zero);
}
