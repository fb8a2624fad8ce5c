#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rim {

/// Binary k-space inclusion pattern with the parameters that produced it.
struct SamplingMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pattern;  // row-major, 0 or 1
  double acceleration = 1.0;
  std::uint64_t seed = 0;
  double fwhm_fraction = 0.7;
  double ellipse_fraction = 0.02;

  bool operator()(std::size_t r, std::size_t c) const { return pattern[r * width + c] != 0; }
  std::size_t count() const;
  /// Fraction of samples kept.
  double density() const { return static_cast<double>(count()) / static_cast<double>(pattern.size()); }

  static SamplingMask full(std::size_t height, std::size_t width);

  friend bool operator==(const SamplingMask&, const SamplingMask&) = default;
};

struct MaskOptions {
  double fwhm_fraction = 0.7;
  double ellipse_fraction = 0.02;
};

/// Number of samples a mask of the given size and acceleration keeps: round(H*W/R).
std::size_t mask_budget(std::size_t height, std::size_t width, double acceleration);

/// True for grid points inside the fully sampled calibration ellipse.
/// Half-axes are ellipse_fraction * (axis/2), floored at one sample; a point
/// is inside when its unit cell overlaps the ellipse (half-pixel margin).
std::vector<std::uint8_t> calibration_ellipse(std::size_t height, std::size_t width, double ellipse_fraction);

/// Variable-density Gaussian mask: the calibration ellipse plus points drawn
/// from a centered Gaussian (per-axis FWHM = fwhm_fraction * axis length),
/// redrawing on collisions until exactly mask_budget() points are set.
SamplingMask gaussian_mask(std::size_t height, std::size_t width, double acceleration, std::uint64_t seed,
                           const MaskOptions& options = {});

/// "RIMK" binary mask file: magic, version byte, u32 height, u32 width,
/// f64 acceleration, u64 seed, row-major bit-packed pattern (MSB first),
/// all little-endian.
std::vector<std::uint8_t> encode_mask(const SamplingMask& mask);
SamplingMask decode_mask(std::span<const std::uint8_t> bytes);
void write_mask(const std::filesystem::path& path, const SamplingMask& mask);
SamplingMask read_mask(const std::filesystem::path& path);

/// Throws an invalid-shape error when the mask does not match the data grid.
void check_mask_shape(const SamplingMask& mask, std::size_t height, std::size_t width);

}  // namespace rim
