#pragma once

#include <cstddef>

#include "rim/tensor.hpp"

namespace rim {

/// Orthonormal periodic 2-D Daubechies-4 (four-tap) transform in Mallat
/// layout (coarse approximation top-left). Inputs whose sides are not
/// multiples of 2^levels are zero-padded up to the next multiple, so the
/// coefficient grid may be larger than the image.
ComplexImage dwt2(const ComplexImage& img, std::size_t levels);

/// Inverse of dwt2, cropped back to height x width.
ComplexImage idwt2(const ComplexImage& coeffs, std::size_t levels, std::size_t height, std::size_t width);

/// Side length after padding to a multiple of 2^levels.
std::size_t wavelet_padded_size(std::size_t n, std::size_t levels);

}  // namespace rim
