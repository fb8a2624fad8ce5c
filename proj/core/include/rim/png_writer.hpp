#pragma once

#include <filesystem>

#include "rim/tensor.hpp"

namespace rim {

/// 8-bit grayscale PNG of `img`, mapping [lo, hi] linearly onto [0, 255].
void write_png(const std::filesystem::path& path, const RealImage& img, double lo, double hi);
/// Same, scaled to the image's own maximum.
void write_png(const std::filesystem::path& path, const RealImage& img);

/// Lossless dump: "RIMF", u32 height, u32 width, row-major f64.
void write_float_dump(const std::filesystem::path& path, const RealImage& img);
RealImage read_float_dump(const std::filesystem::path& path);

}  // namespace rim
