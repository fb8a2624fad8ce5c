#pragma once

#include <cstdint>
#include <string_view>

#include "rim/tensor.hpp"

namespace rim {

enum class PhantomKind {
  SheppLogan,  // modified Shepp-Logan with seeded jitter
  Ellipses,    // random smooth-edged ellipses
  Textured,    // the Ellipses phantom of the same seed modulated by band-limited texture
};

std::string_view to_string(PhantomKind kind);
PhantomKind parse_phantom_kind(std::string_view name);

/// Deterministic complex phantom of side `size` (>= 32) with a smooth
/// synthetic phase map; magnitude normalized to a maximum of 1.
ComplexImage gen_phantom(PhantomKind kind, std::size_t size, std::uint64_t seed);

/// Fraction of k-space energy at radius > cutoff_fraction * (side / 2).
double high_frequency_fraction(const ComplexImage& img, double cutoff_fraction = 0.5);

}  // namespace rim
