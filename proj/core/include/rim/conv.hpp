#pragma once

#include "rim/tensor.hpp"

namespace rim {

/// Same-size 2-D cross-correlation over a (C, H, W) stack with zero padding
/// of (k-1)/2 on each side. `kernels` is (O, C, kh, kw) with odd kh, kw;
/// `bias` is (O) or empty.
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias);

/// Adjoint of conv2d with respect to its input (bias excluded).
Tensor conv2d_transpose(const Tensor& grad_out, const Tensor& kernels);

/// Gradient of <grad_out, conv2d(input, K, 0)> with respect to K.
Tensor conv2d_kernel_grad(const Tensor& input, const Tensor& grad_out, std::size_t kh, std::size_t kw);

/// Unfolds a (C, H, W) stack into a (C*kh*kw, H*W) patch matrix whose row
/// order matches a flattened (C, kh, kw) kernel.
Tensor im2col(const Tensor& input, std::size_t kh, std::size_t kw);
/// Scatter-adds a patch matrix back onto a (C, H, W) stack (adjoint of im2col).
void col2im_add(const Tensor& cols, std::size_t kh, std::size_t kw, Tensor& out);

/// Pixelwise dense map: out(o, p) = sum_i weights(o, i) * input(i, p) + bias(o).
/// Equivalent to a 1x1 convolution. `bias` may be empty.
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);

void check_conv_shapes(const Tensor& input, const Tensor& kernels, const Tensor& bias);

}  // namespace rim
