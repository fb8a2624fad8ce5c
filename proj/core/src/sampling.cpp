#include "rim/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rim/binary_io.hpp"
#include "rim/error.hpp"

namespace rim {
namespace {

constexpr std::uint8_t kMaskVersion = 1;
constexpr double kFwhmToSigma = 2.354820045030949;  // 2 sqrt(2 ln 2)

}  // namespace

std::size_t SamplingMask::count() const {
  return static_cast<std::size_t>(std::count(pattern.begin(), pattern.end(), std::uint8_t{1}));
}

SamplingMask SamplingMask::full(std::size_t height, std::size_t width) {
  SamplingMask m;
  m.height = height;
  m.width = width;
  m.pattern.assign(height * width, 1);
  m.acceleration = 1.0;
  return m;
}

std::size_t mask_budget(std::size_t height, std::size_t width, double acceleration) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(height * width) / acceleration));
}

std::vector<std::uint8_t> calibration_ellipse(std::size_t height, std::size_t width, double ellipse_fraction) {
  const double a = std::max(1.0, ellipse_fraction * static_cast<double>(height) / 2.0) + 0.5;
  const double b = std::max(1.0, ellipse_fraction * static_cast<double>(width) / 2.0) + 0.5;
  const double ch = static_cast<double>(height / 2), cw = static_cast<double>(width / 2);
  std::vector<std::uint8_t> inside(height * width, 0);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double u = (static_cast<double>(r) - ch) / a;
      const double v = (static_cast<double>(c) - cw) / b;
      if (u * u + v * v <= 1.0) inside[r * width + c] = 1;
    }
  }
  return inside;
}

SamplingMask gaussian_mask(std::size_t height, std::size_t width, double acceleration, std::uint64_t seed,
                           const MaskOptions& options) {
  if (height == 0 || width == 0) throw_error(ErrorKind::InvalidShape, "mask dimensions must be positive");
  if (!(acceleration > 1.0)) throw_error(ErrorKind::Config, "acceleration must exceed 1");
  if (!(options.fwhm_fraction > 0.0) || !(options.ellipse_fraction >= 0.0))
    throw_error(ErrorKind::Config, "mask FWHM fraction must be positive and ellipse fraction non-negative");

  SamplingMask mask;
  mask.height = height;
  mask.width = width;
  mask.acceleration = acceleration;
  mask.seed = seed;
  mask.fwhm_fraction = options.fwhm_fraction;
  mask.ellipse_fraction = options.ellipse_fraction;
  mask.pattern = calibration_ellipse(height, width, options.ellipse_fraction);

  const std::size_t budget = mask_budget(height, width, acceleration);
  std::size_t taken = mask.count();
  if (taken > budget)
    throw_error(ErrorKind::Infeasible, "calibration ellipse (" + std::to_string(taken) +
                                           " samples) exceeds the budget of " + std::to_string(budget));
  if (budget == height * width) {
    std::fill(mask.pattern.begin(), mask.pattern.end(), std::uint8_t{1});
    return mask;
  }

  const double sigma_r = options.fwhm_fraction * static_cast<double>(height) / kFwhmToSigma;
  const double sigma_c = options.fwhm_fraction * static_cast<double>(width) / kFwhmToSigma;
  const double ch = static_cast<double>(height / 2), cw = static_cast<double>(width / 2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  while (taken < budget) {
    const double r = std::round(ch + sigma_r * normal(rng));
    const double c = std::round(cw + sigma_c * normal(rng));
    if (r < 0 || c < 0 || r >= static_cast<double>(height) || c >= static_cast<double>(width)) continue;
    auto& cell = mask.pattern[static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c)];
    if (cell) continue;
    cell = 1;
    ++taken;
  }
  return mask;
}

std::vector<std::uint8_t> encode_mask(const SamplingMask& mask) {
  io::ByteWriter w;
  w.bytes("RIMK");
  w.put<std::uint8_t>(kMaskVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(mask.height));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(mask.width));
  w.put<double>(mask.acceleration);
  w.put<std::uint64_t>(mask.seed);
  std::vector<std::uint8_t> packed((mask.pattern.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < mask.pattern.size(); ++i)
    if (mask.pattern[i]) packed[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  w.bytes(packed);
  return std::move(w.buffer());
}

SamplingMask decode_mask(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.expect_magic("RIMK");
  const std::size_t version_at = r.offset();
  if (r.get<std::uint8_t>("version") != kMaskVersion) throw ParseError("unsupported mask version", version_at);
  SamplingMask mask;
  mask.height = r.get<std::uint32_t>("height");
  mask.width = r.get<std::uint32_t>("width");
  if (mask.height == 0 || mask.width == 0) throw ParseError("zero mask dimension", r.offset());
  mask.acceleration = r.get<double>("acceleration");
  mask.seed = r.get<std::uint64_t>("seed");
  const std::size_t n = mask.height * mask.width;
  const auto packed = r.take((n + 7) / 8, "pattern");
  r.expect_end();
  mask.pattern.resize(n);
  for (std::size_t i = 0; i < n; ++i) mask.pattern[i] = (packed[i / 8] >> (7 - i % 8)) & 1u;
  return mask;
}

void write_mask(const std::filesystem::path& path, const SamplingMask& mask) {
  io::write_file(path, encode_mask(mask));
}

SamplingMask read_mask(const std::filesystem::path& path) { return decode_mask(io::read_file(path)); }

void check_mask_shape(const SamplingMask& mask, std::size_t height, std::size_t width) {
  if (mask.height != height || mask.width != width)
    throw_error(ErrorKind::InvalidShape, "mask is " + std::to_string(mask.height) + "x" + std::to_string(mask.width) +
                                             " but data is " + std::to_string(height) + "x" + std::to_string(width));
}

}  // namespace rim
