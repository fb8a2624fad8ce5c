#pragma once

// Deliberately naive reference implementations used as test oracles.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "rim/tensor.hpp"

namespace oracle {

using rim::cdouble;
using rim::ComplexImage;
using rim::RealImage;
using rim::Tensor;

inline std::size_t wrap(long i, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

/// Direct centered orthonormal DFT: DC at (h/2, w/2).
inline ComplexImage dft2(const ComplexImage& x, bool inverse = false) {
  const std::size_t h = x.height(), w = x.width();
  const double sign = inverse ? 1.0 : -1.0;
  const long ch = static_cast<long>(h / 2), cw = static_cast<long>(w / 2);
  ComplexImage out(h, w);
  for (std::size_t ku = 0; ku < h; ++ku) {
    for (std::size_t kv = 0; kv < w; ++kv) {
      cdouble acc = 0.0;
      const double fu = static_cast<double>(static_cast<long>(ku) - ch) / static_cast<double>(h);
      const double fv = static_cast<double>(static_cast<long>(kv) - cw) / static_cast<double>(w);
      for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
          const double pr = static_cast<double>(static_cast<long>(r) - ch);
          const double pc = static_cast<double>(static_cast<long>(c) - cw);
          acc += x(r, c) * std::polar(1.0, sign * 2.0 * std::numbers::pi * (fu * pr + fv * pc));
        }
      }
      out(ku, kv) = acc / std::sqrt(static_cast<double>(h * w));
    }
  }
  return out;
}

/// Nested-loop zero-padded cross-correlation.
inline Tensor conv2d(const Tensor& in, const Tensor& k, const Tensor& bias) {
  const std::size_t C = in.dim(0), H = in.dim(1), W = in.dim(2);
  const std::size_t O = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const long ph = static_cast<long>(kh / 2), pw = static_cast<long>(kw / 2);
  Tensor out({O, H, W});
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c) {
        double acc = bias.numel() ? bias[o] : 0.0;
        for (std::size_t ci = 0; ci < C; ++ci)
          for (std::size_t i = 0; i < kh; ++i)
            for (std::size_t j = 0; j < kw; ++j) {
              const long rr = static_cast<long>(r) + static_cast<long>(i) - ph;
              const long cc = static_cast<long>(c) + static_cast<long>(j) - pw;
              if (rr < 0 || cc < 0 || rr >= static_cast<long>(H) || cc >= static_cast<long>(W)) continue;
              acc += k[((o * C + ci) * kh + i) * kw + j] * in.at(ci, static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
            }
        out.at(o, r, c) = acc;
      }
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Plain SSIM over every 7x7 window with unbiased variances.
inline double ssim(const RealImage& a, const RealImage& b, double L) {
  const double c1 = (0.01 * L) * (0.01 * L), c2 = (0.03 * L) * (0.03 * L);
  const std::size_t n = 7;
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t r = 0; r + n <= a.height; ++r)
    for (std::size_t c = 0; c + n <= a.width; ++c) {
      double ma = 0, mb = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          ma += a(r + i, c + j);
          mb += b(r + i, c + j);
        }
      ma /= 49.0;
      mb /= 49.0;
      double va = 0, vb = 0, cov = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double da = a(r + i, c + j) - ma, db = b(r + i, c + j) - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      va /= 48.0;
      vb /= 48.0;
      cov /= 48.0;
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++windows;
    }
  return total / static_cast<double>(windows);
}

inline ComplexImage random_image(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  ComplexImage img(h, w);
  for (auto& v : img.data()) v = {n(rng), n(rng)};
  return img;
}

inline Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = n(rng);
  return t;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace oracle
