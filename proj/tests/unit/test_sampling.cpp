#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "rim/error.hpp"
#include "rim/sampling.hpp"

using namespace rim;

TEST_CASE("mask keeps exactly round(HW/R) samples") {
  for (double r : {2.0, 3.0, 4.0, 6.0, 8.0, 10.0}) {
    for (std::uint64_t seed : {0u, 1u, 77u}) {
      const auto m = gaussian_mask(48, 40, r, seed);
      CHECK(m.count() == static_cast<std::size_t>(std::llround(48.0 * 40.0 / r)));
      CHECK(m.count() == mask_budget(48, 40, r));
    }
  }
}

TEST_CASE("calibration ellipse is fully sampled") {
  for (std::size_t n : {32u, 64u, 65u}) {
    const auto ellipse = calibration_ellipse(n, n, 0.02);
    const auto m = gaussian_mask(n, n, 8.0, 3);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < ellipse.size(); ++i) {
      if (ellipse[i]) {
        ++inside;
        CHECK(m.pattern[i] == 1);
      }
    }
    CHECK(inside >= 1);
  }
  // 64x64: the central 3x3 block lies inside the ellipse
  const auto e = calibration_ellipse(64, 64, 0.02);
  for (std::size_t r = 31; r <= 33; ++r)
    for (std::size_t c = 31; c <= 33; ++c) CHECK(e[r * 64 + c] == 1);
}

TEST_CASE("masks are deterministic in the seed") {
  CHECK(gaussian_mask(32, 32, 4.0, 5) == gaussian_mask(32, 32, 4.0, 5));
  CHECK_FALSE(gaussian_mask(32, 32, 4.0, 5).pattern == gaussian_mask(32, 32, 4.0, 6).pattern);
}

TEST_CASE("mask configuration errors") {
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;  // sentinel: no throw
  };
  CHECK(kind_of([] { gaussian_mask(32, 32, 1.0, 0); }) == ErrorKind::Config);
  CHECK(kind_of([] { gaussian_mask(32, 32, 0.5, 0); }) == ErrorKind::Config);
  // the calibration ellipse alone exceeds a budget of a single sample
  CHECK(kind_of([] { gaussian_mask(32, 32, 1000.0, 0, {0.7, 0.2}); }) == ErrorKind::Infeasible);
}

TEST_CASE("mask center is sampled more densely than the periphery") {
  std::vector<double> hits(64 * 64, 0.0);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto m = gaussian_mask(64, 64, 4.0, s);
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += m.pattern[i];
  }
  CHECK(hits[32 * 64 + 40] > hits[32 * 64 + 60]);
  CHECK(hits[20 * 64 + 32] > hits[2 * 64 + 32]);
}

TEST_CASE("mask file round trip and corruption") {
  const auto m = gaussian_mask(30, 17, 5.0, 11);
  auto bytes = encode_mask(m);
  const auto back = decode_mask(bytes);
  CHECK(back.pattern == m.pattern);
  CHECK(back.height == 30);
  CHECK(back.width == 17);
  CHECK(back.acceleration == 5.0);
  CHECK(back.seed == 11);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_mask(truncated), ParseError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  try {
    decode_mask(bad_magic);
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() == 0);
  }

  const auto path = std::filesystem::temp_directory_path() / "rim_unit_mask.rimk";
  write_mask(path, m);
  CHECK(read_mask(path).pattern == m.pattern);
  std::filesystem::remove(path);
}

TEST_CASE("mask shape check") {
  const auto m = SamplingMask::full(8, 8);
  CHECK_NOTHROW(check_mask_shape(m, 8, 8));
  CHECK_THROWS_AS(check_mask_shape(m, 8, 9), Error);
  CHECK(m.density() == 1.0);
}
