#include "rim/conv.hpp"

#include <Eigen/Core>
#include <algorithm>

#include "rim/error.hpp"

namespace rim {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<RowMat>;
using CMapR = Eigen::Map<const RowMat>;

void add_bias(Tensor& out, const Tensor& bias) {
  if (bias.numel() == 0) return;
  const std::size_t planes = out.dim(0);
  const std::size_t n = out.numel() / planes;
  for (std::size_t o = 0; o < planes; ++o) {
    double* p = out.ptr() + o * n;
    const double b = bias[o];
    for (std::size_t i = 0; i < n; ++i) p[i] += b;
  }
}

}  // namespace

void check_conv_shapes(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  if (input.rank() != 3) throw_error(ErrorKind::InvalidShape, "conv2d input must be (C, H, W)");
  if (kernels.rank() != 4) throw_error(ErrorKind::InvalidShape, "conv2d kernels must be (O, C, kh, kw)");
  if (kernels.dim(1) != input.dim(0)) throw_error(ErrorKind::InvalidShape, "conv2d channel mismatch");
  if (kernels.dim(2) % 2 == 0 || kernels.dim(3) % 2 == 0)
    throw_error(ErrorKind::InvalidShape, "conv2d kernel sides must be odd");
  if (bias.numel() != 0 && (bias.rank() != 1 || bias.dim(0) != kernels.dim(0)))
    throw_error(ErrorKind::InvalidShape, "conv2d bias must have one entry per output channel");
}

Tensor im2col(const Tensor& input, std::size_t kh, std::size_t kw) {
  const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
  const std::ptrdiff_t py = static_cast<std::ptrdiff_t>(kh / 2), px = static_cast<std::ptrdiff_t>(kw / 2);
  Tensor cols({C * kh * kw, H * W});
  double* dst = cols.ptr();
  for (std::size_t c = 0; c < C; ++c) {
    const double* plane = input.ptr() + c * H * W;
    for (std::size_t ky = 0; ky < kh; ++ky) {
      for (std::size_t kx = 0; kx < kw; ++kx, dst += H * W) {
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - py;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - px;
        const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t c1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(W), static_cast<std::ptrdiff_t>(W) - dx);
        for (std::size_t r = 0; r < H; ++r) {
          const std::ptrdiff_t sr = static_cast<std::ptrdiff_t>(r) + dy;
          double* row = dst + r * W;
          if (sr < 0 || sr >= static_cast<std::ptrdiff_t>(H) || c0 >= c1) continue;
          const double* src = plane + sr * static_cast<std::ptrdiff_t>(W) + dx;
          for (std::ptrdiff_t col = c0; col < c1; ++col) row[col] = src[col];
        }
      }
    }
  }
  return cols;
}

void col2im_add(const Tensor& cols, std::size_t kh, std::size_t kw, Tensor& out) {
  const std::size_t C = out.dim(0), H = out.dim(1), W = out.dim(2);
  const std::ptrdiff_t py = static_cast<std::ptrdiff_t>(kh / 2), px = static_cast<std::ptrdiff_t>(kw / 2);
  const double* src = cols.ptr();
  for (std::size_t c = 0; c < C; ++c) {
    double* plane = out.ptr() + c * H * W;
    for (std::size_t ky = 0; ky < kh; ++ky) {
      for (std::size_t kx = 0; kx < kw; ++kx, src += H * W) {
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - py;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - px;
        const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t c1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(W), static_cast<std::ptrdiff_t>(W) - dx);
        for (std::size_t r = 0; r < H; ++r) {
          const std::ptrdiff_t sr = static_cast<std::ptrdiff_t>(r) + dy;
          if (sr < 0 || sr >= static_cast<std::ptrdiff_t>(H) || c0 >= c1) continue;
          const double* row = src + r * W;
          double* dst = plane + sr * static_cast<std::ptrdiff_t>(W) + dx;
          for (std::ptrdiff_t col = c0; col < c1; ++col) dst[col] += row[col];
        }
      }
    }
  }
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  check_conv_shapes(input, kernels, bias);
  const std::size_t O = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  const std::size_t H = input.dim(1), W = input.dim(2);
  const std::size_t K = kernels.numel() / O;
  Tensor out({O, H, W});
  MapR y(out.ptr(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(H * W));
  CMapR k(kernels.ptr(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(K));
  if (kh == 1 && kw == 1) {
    y.noalias() = k * CMapR(input.ptr(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(H * W));
  } else {
    const Tensor cols = im2col(input, kh, kw);
    y.noalias() = k * CMapR(cols.ptr(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(H * W));
  }
  add_bias(out, bias);
  return out;
}

Tensor conv2d_transpose(const Tensor& grad_out, const Tensor& kernels) {
  const std::size_t O = kernels.dim(0), C = kernels.dim(1), kh = kernels.dim(2), kw = kernels.dim(3);
  if (grad_out.rank() != 3 || grad_out.dim(0) != O) throw_error(ErrorKind::InvalidShape, "conv2d_transpose channel mismatch");
  const std::size_t H = grad_out.dim(1), W = grad_out.dim(2);
  const std::size_t K = C * kh * kw;
  CMapR k(kernels.ptr(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(K));
  CMapR g(grad_out.ptr(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(H * W));
  Tensor out({C, H, W});
  if (kh == 1 && kw == 1) {
    MapR(out.ptr(), static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(H * W)).noalias() = k.transpose() * g;
    return out;
  }
  Tensor cols({K, H * W});
  MapR(cols.ptr(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(H * W)).noalias() = k.transpose() * g;
  col2im_add(cols, kh, kw, out);
  return out;
}

Tensor conv2d_kernel_grad(const Tensor& input, const Tensor& grad_out, std::size_t kh, std::size_t kw) {
  const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2), O = grad_out.dim(0);
  Tensor grad({O, C, kh, kw});
  CMapR g(grad_out.ptr(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(H * W));
  MapR dk(grad.ptr(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(C * kh * kw));
  if (kh == 1 && kw == 1) {
    dk.noalias() = g * CMapR(input.ptr(), static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(H * W)).transpose();
  } else {
    const Tensor cols = im2col(input, kh, kw);
    dk.noalias() = g * CMapR(cols.ptr(), static_cast<Eigen::Index>(C * kh * kw), static_cast<Eigen::Index>(H * W)).transpose();
  }
  return grad;
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 3 || weights.rank() != 2 || weights.dim(1) != input.dim(0))
    throw_error(ErrorKind::InvalidShape, "dense map channel mismatch");
  if (bias.numel() != 0 && bias.numel() != weights.dim(0))
    throw_error(ErrorKind::InvalidShape, "dense bias size mismatch");
  const std::size_t O = weights.dim(0), I = weights.dim(1), P = input.dim(1) * input.dim(2);
  Tensor out({O, input.dim(1), input.dim(2)});
  MapR(out.ptr(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(P)).noalias() =
      CMapR(weights.ptr(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(I)) *
      CMapR(input.ptr(), static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(P));
  add_bias(out, bias);
  return out;
}

}  // namespace rim
