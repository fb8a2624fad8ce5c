#include "rim/wavelet.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "rim/error.hpp"

namespace rim {
namespace {

const std::array<double, 4> kLow = [] {
  const double s3 = std::sqrt(3.0), d = 4.0 * std::sqrt(2.0);
  return std::array<double, 4>{(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d};
}();

const std::array<double, 4> kHigh = {kLow[3], -kLow[2], kLow[1], -kLow[0]};

// One analysis step on a strided line of even length n.
void analyze(cdouble* line, std::size_t n, std::size_t stride, std::vector<cdouble>& scratch) {
  scratch.assign(n, {});
  const std::size_t half = n / 2;
  for (std::size_t k = 0; k < half; ++k) {
    cdouble a{}, d{};
    for (std::size_t j = 0; j < 4; ++j) {
      const cdouble v = line[((2 * k + j) % n) * stride];
      a += kLow[j] * v;
      d += kHigh[j] * v;
    }
    scratch[k] = a;
    scratch[half + k] = d;
  }
  for (std::size_t i = 0; i < n; ++i) line[i * stride] = scratch[i];
}

void synthesize(cdouble* line, std::size_t n, std::size_t stride, std::vector<cdouble>& scratch) {
  scratch.assign(n, {});
  const std::size_t half = n / 2;
  for (std::size_t k = 0; k < half; ++k) {
    const cdouble a = line[k * stride], d = line[(half + k) * stride];
    for (std::size_t j = 0; j < 4; ++j) scratch[(2 * k + j) % n] += kLow[j] * a + kHigh[j] * d;
  }
  for (std::size_t i = 0; i < n; ++i) line[i * stride] = scratch[i];
}

}  // namespace

std::size_t wavelet_padded_size(std::size_t n, std::size_t levels) {
  const std::size_t block = std::size_t{1} << levels;
  return (n + block - 1) / block * block;
}

ComplexImage dwt2(const ComplexImage& img, std::size_t levels) {
  if (levels == 0) return img;
  const std::size_t H = wavelet_padded_size(img.height(), levels), W = wavelet_padded_size(img.width(), levels);
  ComplexImage c(H, W);
  for (std::size_t r = 0; r < img.height(); ++r)
    for (std::size_t col = 0; col < img.width(); ++col) c(r, col) = img(r, col);
  std::vector<cdouble> scratch;
  std::size_t h = H, w = W;
  for (std::size_t level = 0; level < levels; ++level, h /= 2, w /= 2) {
    for (std::size_t r = 0; r < h; ++r) analyze(&c(r, 0), w, 1, scratch);
    for (std::size_t col = 0; col < w; ++col) analyze(&c(0, col), h, W, scratch);
  }
  return c;
}

ComplexImage idwt2(const ComplexImage& coeffs, std::size_t levels, std::size_t height, std::size_t width) {
  if (levels == 0) return coeffs;
  const std::size_t H = coeffs.height(), W = coeffs.width();
  if (H != wavelet_padded_size(height, levels) || W != wavelet_padded_size(width, levels))
    throw_error(ErrorKind::InvalidShape, "coefficient grid does not match the requested image size");
  ComplexImage c = coeffs;
  std::vector<cdouble> scratch;
  for (std::size_t level = levels; level-- > 0;) {
    const std::size_t h = H >> level, w = W >> level;
    for (std::size_t col = 0; col < w; ++col) synthesize(&c(0, col), h, W, scratch);
    for (std::size_t r = 0; r < h; ++r) synthesize(&c(r, 0), w, 1, scratch);
  }
  if (H == height && W == width) return c;
  ComplexImage out(height, width);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t col = 0; col < width; ++col) out(r, col) = c(r, col);
  return out;
}

}  // namespace rim
