#include "rim/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "rim/error.hpp"
#include "rim/fft.hpp"

namespace rim {
namespace {

struct Ellipse {
  double intensity;
  double a, b;    // half-axes in normalized units
  double x0, y0;  // center, x along columns, y up
  double angle;   // degrees
};

// Modified Shepp-Logan (Toft) parameters.
constexpr std::array<Ellipse, 10> kSheppLogan{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
}};

double normalized(std::size_t i, std::size_t n) { return (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n) - 1.0; }

// Soft indicator with an edge roughly half a pixel wide.
void rasterize(std::vector<double>& mag, std::size_t n, const Ellipse& e, bool smooth) {
  const double th = e.angle * std::numbers::pi / 180.0;
  const double ct = std::cos(th), st = std::sin(th);
  const double pixels_per_unit = static_cast<double>(n) / 2.0;
  const double edge_scale = std::min(e.a, e.b) * pixels_per_unit / 0.5;
  for (std::size_t r = 0; r < n; ++r) {
    const double y = -normalized(r, n) - e.y0;
    for (std::size_t c = 0; c < n; ++c) {
      const double x = normalized(c, n) - e.x0;
      const double u = (x * ct + y * st) / e.a;
      const double v = (-x * st + y * ct) / e.b;
      const double rho = std::sqrt(u * u + v * v);
      const double inside = smooth ? 1.0 / (1.0 + std::exp((rho - 1.0) * edge_scale)) : (rho <= 1.0 ? 1.0 : 0.0);
      mag[r * n + c] += e.intensity * inside;
    }
  }
}

std::vector<Ellipse> random_ellipses(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Ellipse> out;
  const double ha = 0.65 + 0.25 * u(rng), hb = 0.75 + 0.2 * u(rng);
  out.push_back({0.6 + 0.2 * u(rng), ha, hb, 0.05 * (u(rng) - 0.5), 0.05 * (u(rng) - 0.5), 20.0 * (u(rng) - 0.5)});
  const int count = 6 + static_cast<int>(u(rng) * 5.0);
  for (int i = 0; i < count; ++i) {
    const double radius = 0.55 * std::sqrt(u(rng));
    const double phi = 2.0 * std::numbers::pi * u(rng);
    const double sign = u(rng) < 0.35 ? -1.0 : 1.0;
    out.push_back({sign * (0.1 + 0.3 * u(rng)), 0.05 + 0.2 * u(rng), 0.05 + 0.2 * u(rng), radius * std::cos(phi) * ha,
                   radius * std::sin(phi) * hb, 180.0 * u(rng)});
  }
  return out;
}

// Unit-variance Gaussian noise restricted to a smooth annulus of spatial frequencies.
std::vector<double> band_limited_texture(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  ComplexImage noise(n, n);
  for (auto& v : noise.data()) v = normal(rng);
  ComplexImage k = fft2_centered(noise);
  const double c = static_cast<double>(n / 2);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t col = 0; col < n; ++col) {
      const double rad = std::hypot(static_cast<double>(r) - c, static_cast<double>(col) - c) / (static_cast<double>(n) / 2.0);
      const double lo = 1.0 / (1.0 + std::exp(-(rad - 0.15) / 0.03));
      const double hi = 1.0 / (1.0 + std::exp((rad - 0.6) / 0.05));
      k(r, col) *= lo * hi;
    }
  }
  const ComplexImage tex = ifft2_centered(k);
  std::vector<double> out(n * n);
  double var = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = tex[i].real();
    var += out[i] * out[i];
  }
  const double sd = std::sqrt(var / static_cast<double>(out.size()));
  for (auto& v : out) v /= sd;
  return out;
}

ComplexImage with_phase(const std::vector<double>& mag, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::array<double, 4> coef{u(rng), u(rng), u(rng), u(rng)};
  const double peak = *std::max_element(mag.begin(), mag.end());
  ComplexImage img(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    const double y = -normalized(r, n);
    for (std::size_t c = 0; c < n; ++c) {
      const double x = normalized(c, n);
      const double phase = std::numbers::pi / 4.0 * (coef[0] * x + coef[1] * y + coef[2] * x * y + coef[3] * (x * x - y * y));
      img(r, c) = std::polar(peak > 0.0 ? mag[r * n + c] / peak : 0.0, phase);
    }
  }
  return img;
}

}  // namespace

std::string_view to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::SheppLogan: return "shepp-logan";
    case PhantomKind::Ellipses: return "ellipses";
    case PhantomKind::Textured: return "textured";
  }
  return "unknown";
}

PhantomKind parse_phantom_kind(std::string_view name) {
  if (name == "shepp-logan" || name == "shepp") return PhantomKind::SheppLogan;
  if (name == "ellipses") return PhantomKind::Ellipses;
  if (name == "textured" || name == "texture") return PhantomKind::Textured;
  throw_error(ErrorKind::Config, "unknown phantom kind '" + std::string(name) + "'");
}

ComplexImage gen_phantom(PhantomKind kind, std::size_t size, std::uint64_t seed) {
  if (size < 32) throw_error(ErrorKind::Config, "phantom size must be at least 32");
  std::mt19937_64 rng(seed);
  std::vector<double> mag(size * size, 0.0);
  if (kind == PhantomKind::SheppLogan) {
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    for (Ellipse e : kSheppLogan) {
      e.a *= 1.0 + 0.03 * jitter(rng);
      e.b *= 1.0 + 0.03 * jitter(rng);
      e.x0 += 0.01 * jitter(rng);
      e.y0 += 0.01 * jitter(rng);
      rasterize(mag, size, e, false);
    }
  } else {
    for (const auto& e : random_ellipses(rng)) rasterize(mag, size, e, true);
    for (auto& v : mag) v = std::max(v, 0.0);
    if (kind == PhantomKind::Textured) {
      std::mt19937_64 tex_rng(seed ^ 0x7e87u);
      const auto tex = band_limited_texture(size, tex_rng);
      for (std::size_t i = 0; i < mag.size(); ++i) mag[i] *= 1.0 + 0.2 * tex[i];
    }
  }
  for (auto& v : mag) v = std::max(v, 0.0);
  return with_phase(mag, size, rng);
}

double high_frequency_fraction(const ComplexImage& img, double cutoff_fraction) {
  const ComplexImage k = fft2_centered(img);
  const double cr = static_cast<double>(img.height() / 2), cc = static_cast<double>(img.width() / 2);
  const double limit = cutoff_fraction * std::min(img.height(), img.width()) / 2.0;
  double total = 0.0, high = 0.0;
  for (std::size_t r = 0; r < k.height(); ++r) {
    for (std::size_t c = 0; c < k.width(); ++c) {
      const double e = std::norm(k(r, c));
      total += e;
      if (std::hypot(static_cast<double>(r) - cr, static_cast<double>(c) - cc) > limit) high += e;
    }
  }
  return total > 0.0 ? high / total : 0.0;
}

}  // namespace rim
