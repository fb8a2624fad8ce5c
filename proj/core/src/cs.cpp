#include "rim/cs.hpp"

#include <cmath>
#include <random>

#include "rim/error.hpp"
#include "rim/wavelet.hpp"

namespace rim {
namespace {

double l1_norm(const ComplexImage& c) {
  double acc = 0.0;
  for (const auto& v : c.data()) acc += std::abs(v);
  return acc;
}

ComplexImage prox(const ComplexImage& v, double tau, std::size_t levels) {
  return idwt2(soft_threshold(dwt2(v, levels), tau), levels, v.height(), v.width());
}

}  // namespace

void CsConfig::validate() const {
  if (!(lambda > 0.0)) throw_error(ErrorKind::Config, "CS lambda must be positive");
  if (max_iters < 1) throw_error(ErrorKind::Config, "CS needs at least one iteration");
  if (power_iters < 1) throw_error(ErrorKind::Config, "power method needs at least one iteration");
}

ComplexImage soft_threshold(const ComplexImage& coeffs, double tau) {
  ComplexImage out = coeffs;
  for (auto& v : out.data()) {
    const double m = std::abs(v);
    v = m > tau ? v * ((m - tau) / m) : cdouble{};
  }
  return out;
}

double estimate_lipschitz(const CoilSet& coils, const SamplingMask& mask, std::size_t iterations) {
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  ComplexImage v(coils.height(), coils.width());
  for (auto& s : v.data()) s = {normal(rng), normal(rng)};
  double lambda = 0.0;
  for (std::size_t i = 0; i < iterations; ++i) {
    const double n = norm(v);
    if (n == 0.0) return 0.0;
    v *= 1.0 / n;
    v = normal_op(v, coils, mask);
    lambda = norm(v);
  }
  return lambda;
}

double cs_objective(const ComplexImage& x, const CoilSet& coils, const SamplingMask& mask, const CsConfig& config) {
  return 0.5 * data_fidelity(x, coils, mask, 1.0) + config.lambda * l1_norm(dwt2(x, config.levels));
}

CsResult cs_solve(const CoilSet& coils, const SamplingMask& mask, const CsConfig& config) {
  config.validate();
  if (!coils.measurements) throw_error(ErrorKind::Contract, "CS reconstruction needs measurements");
  const ComplexImage aty = adjoint_op(*coils.measurements, coils, mask);
  CsResult result{aty, {}, estimate_lipschitz(coils, mask, config.power_iters)};
  if (!(result.lipschitz > 0.0)) return result;  // nothing is observed
  const double step = 1.0 / result.lipschitz;

  ComplexImage x = aty, x_prev = aty, y = aty;
  double t = 1.0;
  double f_prev = cs_objective(x, coils, mask, config);
  double last_candidate = f_prev;
  std::size_t rising = 0;
  for (std::size_t k = 0; k < config.max_iters; ++k) {
    ComplexImage grad = normal_op(y, coils, mask);
    grad -= aty;
    ComplexImage z = prox(y - grad * step, config.lambda * step, config.levels);
    const double fz = cs_objective(z, coils, mask, config);
    if (!std::isfinite(fz)) throw_error(ErrorKind::Numerical, "CS objective is not finite");
    rising = fz > last_candidate ? rising + 1 : 0;
    last_candidate = fz;
    if (rising >= 5) throw_error(ErrorKind::Numerical, "CS objective increased for 5 consecutive iterations");

    x = fz <= f_prev ? z : x_prev;
    const double f_x = std::min(fz, f_prev);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x + (z - x) * (t / t_next) + (x - x_prev) * ((t - 1.0) / t_next);
    x_prev = x;
    t = t_next;
    f_prev = f_x;
    result.objective.push_back(f_x);
  }
  result.image = std::move(x);
  return result;
}

ComplexImage cs_reconstruct(const CoilSet& coils, const SamplingMask& mask, const CsConfig& config) {
  return cs_solve(coils, mask, config).image;
}

}  // namespace rim
