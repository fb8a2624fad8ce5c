#pragma once

#include <cstddef>
#include <vector>

#include "rim/mri_model.hpp"
#include "rim/sampling.hpp"
#include "rim/tensor.hpp"

namespace rim {

struct CsConfig {
  double lambda = 0.005;
  std::size_t max_iters = 60;
  std::size_t levels = 3;
  std::size_t power_iters = 20;

  void validate() const;
};

/// Complex soft-thresholding: shrinks each magnitude by tau, keeps the phase.
ComplexImage soft_threshold(const ComplexImage& coeffs, double tau);

/// Largest eigenvalue of A^H A by power iteration from a fixed start vector.
double estimate_lipschitz(const CoilSet& coils, const SamplingMask& mask, std::size_t iterations);

/// 0.5 ||A x - y||^2 + lambda ||Psi x||_1
double cs_objective(const ComplexImage& x, const CoilSet& coils, const SamplingMask& mask, const CsConfig& config);

struct CsResult {
  ComplexImage image;
  std::vector<double> objective;  // accepted objective after each iteration
  double lipschitz = 0.0;
};

/// Monotone FISTA on the l1-wavelet regularized SENSE problem, started from
/// the zero-filled estimate with step 1/L.
CsResult cs_solve(const CoilSet& coils, const SamplingMask& mask, const CsConfig& config = {});
ComplexImage cs_reconstruct(const CoilSet& coils, const SamplingMask& mask, const CsConfig& config = {});

}  // namespace rim
