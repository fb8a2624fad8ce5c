#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rim/error.hpp"
#include "rim/fft.hpp"
#include "rim/metrics.hpp"

using namespace rim;

namespace {

RealImage random_real(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealImage img(h, w);
  for (auto& v : img.data) v = u(rng);
  return img;
}

}  // namespace

TEST_CASE("ssim equals the window-loop oracle") {
  std::mt19937_64 rng(61);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{7, 7}, {16, 12}, {33, 20}}) {
    const auto a = random_real(h, w, rng);
    auto b = a;
    for (auto& v : b.data) v += 0.2 * std::uniform_real_distribution<double>(-1, 1)(rng);
    CHECK(std::abs(ssim(a, b, 1.0) - oracle::ssim(a, b, 1.0)) < 1e-10);
    CHECK(std::abs(ssim(a, b, 2.5) - oracle::ssim(a, b, 2.5)) < 1e-10);
  }
}

TEST_CASE("ssim identity, symmetry and bounds") {
  std::mt19937_64 rng(62);
  const auto a = random_real(20, 20, rng);
  const auto b = random_real(20, 20, rng);
  CHECK(ssim(a, a, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ssim(a, b, 1.0) == doctest::Approx(ssim(b, a, 1.0)).epsilon(1e-14));
  CHECK(ssim(a, b, 1.0) < 1.0);
  CHECK_THROWS_AS(ssim(a, random_real(20, 21, rng), 1.0), Error);
  CHECK_THROWS_AS(ssim(random_real(6, 20, rng), random_real(6, 20, rng), 1.0), Error);
}

TEST_CASE("psnr closed forms") {
  std::mt19937_64 rng(63);
  const auto ref = random_real(10, 10, rng);
  auto off = ref;
  for (auto& v : off.data) v += 0.1;
  CHECK(psnr(off, ref) == doctest::Approx(20.0).epsilon(1e-12));
  auto half = ref;
  for (auto& v : half.data) v += 0.05;
  CHECK(std::abs(psnr(half, ref) - psnr(off, ref) - 20.0 * std::log10(2.0)) < 1e-9);
  CHECK(std::isinf(psnr(ref, ref)));
  CHECK(psnr(off, ref, 2.0) == doctest::Approx(20.0 + 20.0 * std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("otsu separates a bimodal image") {
  RealImage img(10, 10, 0.1);
  for (std::size_t i = 50; i < 100; ++i) img.data[i] = 0.9;
  const double t = otsu_threshold(img);
  CHECK(t > 0.1);
  CHECK(t < 0.9);
}

TEST_CASE("snr estimate") {
  RealImage img(64, 64, 0.0);
  for (std::size_t r = 16; r < 48; ++r)
    for (std::size_t c = 16; c < 48; ++c) img(r, c) = 2.0;
  ComplexImage k(64, 64, cdouble(0.5, 0.0));
  CHECK(snr_estimate(img, k, 32) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(snr_estimate(img, ComplexImage(48, 48, 1.0), 32), Error);
  try {
    snr_estimate(img, ComplexImage(64, 64), 32);
    FAIL("expected a numerical error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
  }
}

TEST_CASE("metrics csv") {
  MetricsRecord r{"indrnn", "textured", 4.0, 3, 11, 0.9, 31.5};
  CHECK(metrics_csv_header() == "model,dataset,acceleration,slice,seed,ssim,psnr,snr");
  const auto row = to_csv_row(r);
  CHECK(row.starts_with("indrnn,textured,4,3,11,0.9,31.5,"));
  CHECK(row.find("nan") != std::string::npos);
  const auto all = to_csv({r, r});
  CHECK(std::count(all.begin(), all.end(), '\n') == 3);
}
