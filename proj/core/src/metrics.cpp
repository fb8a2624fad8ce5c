#include "rim/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "rim/error.hpp"

namespace rim {
namespace {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

}  // namespace

double ssim(const RealImage& a, const RealImage& b, double dynamic_range) {
  if (!a.same_shape(b)) throw_error(ErrorKind::InvalidShape, "SSIM operands differ in shape");
  if (!(dynamic_range > 0.0)) throw_error(ErrorKind::Contract, "SSIM dynamic range must be positive");
  const std::size_t w = kSsimWindow;
  if (a.height < w || a.width < w) throw_error(ErrorKind::InvalidShape, "image smaller than the SSIM window");
  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  const double n = static_cast<double>(w * w);

  // Integral images of a, b, a^2, b^2, ab make each window O(1).
  const std::size_t H = a.height, W = a.width;
  std::array<std::vector<double>, 5> integral;
  for (auto& t : integral) t.assign((H + 1) * (W + 1), 0.0);
  for (std::size_t r = 0; r < H; ++r) {
    std::array<double, 5> row{};
    for (std::size_t c = 0; c < W; ++c) {
      const double x = a(r, c), y = b(r, c);
      const std::array<double, 5> v{x, y, x * x, y * y, x * y};
      for (std::size_t k = 0; k < 5; ++k) {
        row[k] += v[k];
        integral[k][(r + 1) * (W + 1) + c + 1] = integral[k][r * (W + 1) + c + 1] + row[k];
      }
    }
  }
  auto box = [&](std::size_t k, std::size_t r, std::size_t c) {
    const auto& t = integral[k];
    return t[(r + w) * (W + 1) + c + w] - t[r * (W + 1) + c + w] - t[(r + w) * (W + 1) + c] + t[r * (W + 1) + c];
  };

  double total = 0.0;
  for (std::size_t r = 0; r + w <= H; ++r) {
    for (std::size_t c = 0; c + w <= W; ++c) {
      const double mx = box(0, r, c) / n, my = box(1, r, c) / n;
      const double vx = (box(2, r, c) - n * mx * mx) / (n - 1.0);
      const double vy = (box(3, r, c) - n * my * my) / (n - 1.0);
      const double cxy = (box(4, r, c) - n * mx * my) / (n - 1.0);
      total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / static_cast<double>((H - w + 1) * (W - w + 1));
}

double psnr(const RealImage& a, const RealImage& b, double peak) {
  if (!a.same_shape(b)) throw_error(ErrorKind::InvalidShape, "PSNR operands differ in shape");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double otsu_threshold(const RealImage& img) {
  const auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return lo;
  constexpr std::size_t bins = 256;
  std::array<double, bins> hist{};
  for (double v : img.data) {
    auto idx = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    hist[std::min(idx, bins - 1)] += 1.0;
  }
  const double total = static_cast<double>(img.data.size());
  double sum_all = 0.0;
  for (std::size_t i = 0; i < bins; ++i) sum_all += static_cast<double>(i) * hist[i];
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  std::size_t best_bin = 0;
  for (std::size_t i = 0; i < bins; ++i) {
    w0 += hist[i];
    if (w0 == 0.0) continue;
    const double w1 = total - w0;
    if (w1 == 0.0) break;
    sum0 += static_cast<double>(i) * hist[i];
    const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_bin = i;
    }
  }
  return lo + (hi - lo) * static_cast<double>(best_bin + 1) / static_cast<double>(bins);
}

double snr_estimate(const RealImage& image, const ComplexImage& kspace, std::size_t patch) {
  if (kspace.height() < 2 * patch || kspace.width() < 2 * patch)
    throw_error(ErrorKind::InvalidShape, "k-space must be at least twice the noise patch size");
  const double threshold = otsu_threshold(image);
  double signal = 0.0;
  std::size_t count = 0;
  for (double v : image.data) {
    if (v > threshold) {
      signal += v;
      ++count;
    }
  }
  if (count == 0 || signal == 0.0) throw_error(ErrorKind::Numerical, "undefined SNR: no foreground signal");
  signal /= static_cast<double>(count);

  std::vector<double> corner;
  corner.reserve(patch * patch);
  for (std::size_t r = 0; r < patch; ++r)
    for (std::size_t c = 0; c < patch; ++c) corner.push_back(std::abs(kspace(r, c)));
  auto mid = corner.begin() + static_cast<std::ptrdiff_t>(corner.size() / 2);
  std::nth_element(corner.begin(), mid, corner.end());
  double noise = *mid;
  if (corner.size() % 2 == 0) noise = 0.5 * (noise + *std::max_element(corner.begin(), mid));
  if (noise == 0.0) throw_error(ErrorKind::Numerical, "undefined SNR: zero noise level");
  return signal / noise;
}

std::string metrics_csv_header() { return "model,dataset,acceleration,slice,seed,ssim,psnr,snr"; }

std::string to_csv_row(const MetricsRecord& r) {
  std::ostringstream s;
  s << r.model << ',' << r.dataset << ',' << format_double(r.acceleration) << ',' << r.slice << ',' << r.seed << ','
    << format_double(r.ssim) << ',' << format_double(r.psnr) << ',' << format_double(r.snr);
  return s.str();
}

std::string to_csv(const std::vector<MetricsRecord>& records) {
  std::string out = metrics_csv_header() + "\n";
  for (const auto& r : records) out += to_csv_row(r) + "\n";
  return out;
}

}  // namespace rim
