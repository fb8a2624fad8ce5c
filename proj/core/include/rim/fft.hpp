#pragma once

#include <span>

#include "rim/tensor.hpp"

namespace rim {

/// Orthonormal 2-D DFT with the DC sample at the grid center (index h/2, w/2).
/// Shifts are applied before and after the transform, so odd sizes work too.
ComplexImage fft2_centered(const ComplexImage& img);
/// Inverse (and adjoint) of fft2_centered.
ComplexImage ifft2_centered(const ComplexImage& img);

/// Orthonormal centered 1-D transforms, in place.
void fft1_centered(std::span<cdouble> line);
void ifft1_centered(std::span<cdouble> line);

}  // namespace rim
