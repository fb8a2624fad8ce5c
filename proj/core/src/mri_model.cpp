#include "rim/mri_model.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "rim/error.hpp"
#include "rim/fft.hpp"

namespace rim {
namespace {

void check_operands(const ComplexImage& x, const CoilSet& coils, const SamplingMask& mask) {
  coils.validate();
  if (!x.same_shape(coils.sensitivities.front())) throw_error(ErrorKind::InvalidShape, "image and coil maps differ in shape");
  check_mask_shape(mask, x.height(), x.width());
}

void apply_mask(ComplexImage& k, const SamplingMask& mask) {
  for (std::size_t i = 0; i < k.size(); ++i)
    if (!mask.pattern[i]) k[i] = {};
}

ComplexImage coil_forward(const ComplexImage& x, const ComplexImage& s, const SamplingMask& mask) {
  ComplexImage weighted = x;
  for (std::size_t i = 0; i < x.size(); ++i) weighted[i] *= s[i];
  ComplexImage k = fft2_centered(weighted);
  apply_mask(k, mask);
  return k;
}

void coil_adjoint_add(ComplexImage k, const ComplexImage& s, const SamplingMask& mask, ComplexImage& acc) {
  apply_mask(k, mask);
  const ComplexImage img = ifft2_centered(k);
  for (std::size_t i = 0; i < img.size(); ++i) acc[i] += std::conj(s[i]) * img[i];
}

}  // namespace

void CoilSet::validate() const {
  if (sensitivities.empty()) throw_error(ErrorKind::InvalidShape, "coil set is empty");
  const auto& ref = sensitivities.front();
  for (const auto& s : sensitivities)
    if (!s.same_shape(ref)) throw_error(ErrorKind::InvalidShape, "coil maps differ in shape");
  if (measurements) {
    if (measurements->size() != sensitivities.size())
      throw_error(ErrorKind::InvalidShape, "measurement count differs from coil count");
    for (const auto& y : *measurements)
      if (!y.same_shape(ref)) throw_error(ErrorKind::InvalidShape, "measurement shape differs from coil maps");
  }
}

CoilData forward_op(const ComplexImage& x, const CoilSet& coils, const SamplingMask& mask) {
  check_operands(x, coils, mask);
  CoilData out;
  out.reserve(coils.coil_count());
  for (const auto& s : coils.sensitivities) out.push_back(coil_forward(x, s, mask));
  return out;
}

ComplexImage adjoint_op(const CoilData& y, const CoilSet& coils, const SamplingMask& mask) {
  coils.validate();
  if (y.size() != coils.coil_count()) throw_error(ErrorKind::InvalidShape, "k-space coil count differs from coil maps");
  const auto& ref = coils.sensitivities.front();
  check_mask_shape(mask, ref.height(), ref.width());
  ComplexImage acc(ref.height(), ref.width());
  for (std::size_t c = 0; c < y.size(); ++c) {
    if (!y[c].same_shape(ref)) throw_error(ErrorKind::InvalidShape, "k-space shape differs from coil maps");
    coil_adjoint_add(y[c], coils.sensitivities[c], mask, acc);
  }
  return acc;
}

ComplexImage normal_op(const ComplexImage& x, const CoilSet& coils, const SamplingMask& mask) {
  check_operands(x, coils, mask);
  ComplexImage acc(x.height(), x.width());
  for (const auto& s : coils.sensitivities) coil_adjoint_add(coil_forward(x, s, mask), s, mask, acc);
  return acc;
}

ComplexImage loglik_gradient(const ComplexImage& x, const CoilSet& coils, const SamplingMask& mask, double sigma) {
  if (!coils.measurements) throw_error(ErrorKind::Contract, "log-likelihood gradient needs measurements");
  if (!(sigma > 0.0)) throw_error(ErrorKind::Contract, "sigma must be positive");
  check_operands(x, coils, mask);
  ComplexImage acc(x.height(), x.width());
  for (std::size_t c = 0; c < coils.coil_count(); ++c) {
    ComplexImage residual = coil_forward(x, coils.sensitivities[c], mask);
    residual -= (*coils.measurements)[c];
    coil_adjoint_add(std::move(residual), coils.sensitivities[c], mask, acc);
  }
  acc *= 1.0 / (sigma * sigma);
  return acc;
}

double data_fidelity(const ComplexImage& x, const CoilSet& coils, const SamplingMask& mask, double sigma) {
  if (!coils.measurements) throw_error(ErrorKind::Contract, "data fidelity needs measurements");
  check_operands(x, coils, mask);
  double acc = 0.0;
  for (std::size_t c = 0; c < coils.coil_count(); ++c) {
    ComplexImage residual = coil_forward(x, coils.sensitivities[c], mask);
    ComplexImage y = (*coils.measurements)[c];
    apply_mask(y, mask);
    residual -= y;
    const double n = norm(residual);
    acc += n * n;
  }
  return acc / (sigma * sigma);
}

CoilSet synth_sensitivities(std::size_t height, std::size_t width, std::size_t coil_count, std::uint64_t seed) {
  if (coil_count == 0) throw_error(ErrorKind::Config, "coil count must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double h = static_cast<double>(height), w = static_cast<double>(width);
  const double extent = std::max(h, w);

  CoilSet coils;
  coils.sensitivities.reserve(coil_count);
  const double offset = 2.0 * std::numbers::pi * unit(rng);
  for (std::size_t k = 0; k < coil_count; ++k) {
    const double angle = offset + 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.25 * (unit(rng) - 0.5)) /
                                      static_cast<double>(coil_count);
    const double radius = 0.55 + 0.1 * unit(rng);
    const double cr = h / 2.0 + radius * h * std::sin(angle);
    const double cc = w / 2.0 + radius * w * std::cos(angle);
    const double spread = (0.45 + 0.15 * unit(rng)) * extent;
    const double ramp_r = std::numbers::pi * (unit(rng) - 0.5) / h;
    const double ramp_c = std::numbers::pi * (unit(rng) - 0.5) / w;
    const double phase0 = 2.0 * std::numbers::pi * unit(rng);
    ComplexImage s(height, width);
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        const double dr = static_cast<double>(r) - cr, dc = static_cast<double>(c) - cc;
        const double mag = std::exp(-(dr * dr + dc * dc) / (2.0 * spread * spread));
        const double phase = phase0 + ramp_r * static_cast<double>(r) + ramp_c * static_cast<double>(c);
        s(r, c) = std::polar(mag, phase);
      }
    }
    coils.sensitivities.push_back(std::move(s));
  }

  for (std::size_t i = 0; i < height * width; ++i) {
    double energy = 0.0;
    for (const auto& s : coils.sensitivities) energy += std::norm(s[i]);
    const double combined = std::sqrt(energy);
    for (auto& s : coils.sensitivities) s[i] = combined > 1e-8 ? s[i] / combined : cdouble{};
  }
  return coils;
}

CoilData add_noise(const CoilData& y, const SamplingMask& mask, const NoiseSpec& spec) {
  if (spec.sigma < 0.0) throw_error(ErrorKind::Config, "noise sigma must be non-negative");
  CoilData out = y;
  if (spec.sigma == 0.0) return out;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, spec.sigma);
  for (auto& k : out) {
    check_mask_shape(mask, k.height(), k.width());
    for (std::size_t i = 0; i < k.size(); ++i) {
      if (!mask.pattern[i]) continue;
      const double re = normal(rng);
      const double im = normal(rng);
      k[i] += cdouble(re, im);
    }
  }
  return out;
}

}  // namespace rim

namespace rim {

CoilSet acquire(const ComplexImage& x, std::vector<ComplexImage> sensitivities, const SamplingMask& mask,
                const NoiseSpec& noise) {
  CoilSet coils{std::move(sensitivities), std::nullopt};
  coils.measurements = add_noise(forward_op(x, coils, mask), mask, noise);
  return coils;
}

}  // namespace rim
