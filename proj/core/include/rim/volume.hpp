#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rim/keyvalue.hpp"
#include "rim/tensor.hpp"

namespace rim {

enum class Domain : std::uint8_t { Image = 0, KSpace = 1 };

/// Multi-coil 3-D complex volume. Samples are coil-major, then row-major over
/// dims[0], dims[1], dims[2]. `readout_axis` names the frequency-encode axis.
struct Volume {
  std::array<std::size_t, 3> dims{};
  std::size_t coils = 1;
  Domain domain = Domain::Image;
  std::uint8_t readout_axis = 0;
  std::vector<std::complex<float>> samples;
  KeyValues meta;  // modality, normalization, provenance

  std::size_t index(std::size_t coil, std::size_t i, std::size_t j, std::size_t k) const {
    return ((coil * dims[0] + i) * dims[1] + j) * dims[2] + k;
  }
  void validate() const;
};

/// "RIMV" payload: magic, version, domain, readout axis, reserved byte,
/// 3 x u32 dims, u32 coils, then interleaved f32 (re, im) pairs.
std::vector<std::uint8_t> encode_volume(const Volume& volume);
Volume decode_volume(std::span<const std::uint8_t> bytes);

/// Writes the binary file and its `.meta` sidecar.
void write_volume(const std::filesystem::path& path, const Volume& volume);
/// Reads the binary file and, if present, the sidecar.
Volume read_volume(const std::filesystem::path& path);

struct Slice {
  std::size_t index = 0;
  std::vector<ComplexImage> coils;
};

/// Inverse centered 1-D FFT along the readout axis (k-space volumes only),
/// then one 2-D slice per readout position spanning the remaining two axes.
std::vector<Slice> slice_ingest(const Volume& volume);

}  // namespace rim
