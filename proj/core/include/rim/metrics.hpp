#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rim/tensor.hpp"

namespace rim {

/// Side of the uniform SSIM window.
inline constexpr std::size_t kSsimWindow = 7;

/// Mean structural similarity over every fully contained 7x7 window, with
/// C1 = (0.01 L)^2, C2 = (0.03 L)^2 and unbiased (N-1) window variances.
double ssim(const RealImage& a, const RealImage& b, double dynamic_range);

/// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const RealImage& a, const RealImage& b, double peak = 1.0);

/// Otsu threshold over a 256-bin histogram of the image range.
double otsu_threshold(const RealImage& img);

/// Signal = mean of pixels above the Otsu threshold; noise = median |k| in
/// the (0, 0) corner square of side `patch`. Returns signal / noise.
double snr_estimate(const RealImage& image, const ComplexImage& kspace, std::size_t patch = 32);

struct MetricsRecord {
  std::string model;
  std::string dataset;
  double acceleration = 0.0;
  std::size_t slice = 0;
  std::uint64_t seed = 0;
  double ssim = 0.0;
  double psnr = 0.0;
  double snr = std::numeric_limits<double>::quiet_NaN();
};

/// "model,dataset,acceleration,slice,seed,ssim,psnr,snr"
std::string metrics_csv_header();
std::string to_csv_row(const MetricsRecord& record);
std::string to_csv(const std::vector<MetricsRecord>& records);

}  // namespace rim
