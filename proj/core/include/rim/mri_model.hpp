#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rim/sampling.hpp"
#include "rim/tensor.hpp"

namespace rim {

/// Per-coil k-space data, one centered image per receiver coil.
using CoilData = std::vector<ComplexImage>;

/// Receiver-coil sensitivities S_i and, optionally, their k-space measurements y_i.
struct CoilSet {
  std::vector<ComplexImage> sensitivities;
  std::optional<CoilData> measurements;

  std::size_t coil_count() const noexcept { return sensitivities.size(); }
  std::size_t height() const { return sensitivities.front().height(); }
  std::size_t width() const { return sensitivities.front().width(); }

  /// Throws unless every coil image (and measurement) shares one shape.
  void validate() const;
};

struct NoiseSpec {
  double sigma = 0.0;  // per real/imaginary component
  std::uint64_t seed = 0;
};

/// y_i = P F (S_i x) for every coil; unsampled positions are exactly zero.
CoilData forward_op(const ComplexImage& x, const CoilSet& coils, const SamplingMask& mask);

/// sum_i conj(S_i) F^-1 (P y_i); the exact adjoint of forward_op.
ComplexImage adjoint_op(const CoilData& y, const CoilSet& coils, const SamplingMask& mask);

/// adjoint_op(forward_op(x)) without materializing every coil at once.
ComplexImage normal_op(const ComplexImage& x, const CoilSet& coils, const SamplingMask& mask);

/// Log-likelihood gradient (1/sigma^2) A^H (A x - y). The factor 2 of the
/// true derivative of the squared residual is absorbed into sigma.
ComplexImage loglik_gradient(const ComplexImage& x, const CoilSet& coils, const SamplingMask& mask, double sigma);

/// (1/sigma^2) sum_i ||P F S_i x - y_i||^2
double data_fidelity(const ComplexImage& x, const CoilSet& coils, const SamplingMask& mask, double sigma);

/// Smooth synthetic coil maps (Gaussian lobes around the border with linear
/// phase ramps), normalized so that sum_i |S_i|^2 = 1 wherever the combined
/// magnitude exceeds 1e-8, and 0 elsewhere.
CoilSet synth_sensitivities(std::size_t height, std::size_t width, std::size_t coil_count, std::uint64_t seed);

/// Adds independent N(0, sigma^2) draws to real and imaginary parts at
/// sampled positions only.
CoilData add_noise(const CoilData& y, const SamplingMask& mask, const NoiseSpec& spec);

}  // namespace rim

namespace rim {

/// Retrospective acquisition: y = P F S_i x (+ noise at sampled positions).
CoilSet acquire(const ComplexImage& x, std::vector<ComplexImage> sensitivities, const SamplingMask& mask,
                const NoiseSpec& noise = {});

}  // namespace rim
