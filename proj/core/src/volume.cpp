#include "rim/volume.hpp"

#include <cmath>
#include <string>

#include "rim/binary_io.hpp"
#include "rim/error.hpp"
#include "rim/fft.hpp"

namespace rim {
namespace {

constexpr std::uint8_t kVersion = 1;

}  // namespace

void Volume::validate() const {
  if (readout_axis > 2) throw_error(ErrorKind::InvalidShape, "readout axis must be 0, 1 or 2");
  if (coils == 0 || dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
    throw_error(ErrorKind::InvalidShape, "volume dimensions must be positive");
  if (samples.size() != coils * dims[0] * dims[1] * dims[2])
    throw_error(ErrorKind::InvalidShape, "volume payload length does not match its dimensions");
  if (auto norm = meta.get("normalization")) {
    double v = 0.0;
    try {
      v = std::stod(*norm);
    } catch (const std::exception&) {
      throw_error(ErrorKind::Config, "normalization is not a number: " + *norm);
    }
    if (!(v > 0.0)) throw_error(ErrorKind::Config, "normalization constant must be positive");
  }
}

std::vector<std::uint8_t> encode_volume(const Volume& volume) {
  volume.validate();
  io::ByteWriter w;
  w.bytes("RIMV");
  w.put<std::uint8_t>(kVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(volume.domain));
  w.put<std::uint8_t>(volume.readout_axis);
  w.put<std::uint8_t>(0);
  for (auto d : volume.dims) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(volume.coils));
  for (const auto& s : volume.samples) {
    w.put<float>(s.real());
    w.put<float>(s.imag());
  }
  return std::move(w.buffer());
}

Volume decode_volume(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.expect_magic("RIMV");
  const std::size_t version_at = r.offset();
  if (r.get<std::uint8_t>("version") != kVersion) throw ParseError("unsupported volume version", version_at);
  Volume v;
  const std::size_t domain_at = r.offset();
  const auto domain = r.get<std::uint8_t>("domain");
  if (domain > 1) throw ParseError("unknown domain flag", domain_at);
  v.domain = static_cast<Domain>(domain);
  const std::size_t axis_at = r.offset();
  v.readout_axis = r.get<std::uint8_t>("readout axis");
  if (v.readout_axis > 2) throw ParseError("readout axis out of range", axis_at);
  r.get<std::uint8_t>("reserved");
  for (auto& d : v.dims) d = r.get<std::uint32_t>("dims");
  v.coils = r.get<std::uint32_t>("coil count");
  const std::size_t header_end = r.offset();
  const std::size_t n = v.coils * v.dims[0] * v.dims[1] * v.dims[2];
  if (n == 0) throw ParseError("zero-sized volume", header_end);
  if (r.remaining() != n * 8) throw ParseError("payload length does not match header dims", header_end);
  v.samples.resize(n);
  for (auto& s : v.samples) {
    const float re = r.get<float>("sample");
    const float im = r.get<float>("sample");
    s = {re, im};
  }
  r.expect_end();
  return v;
}

void write_volume(const std::filesystem::path& path, const Volume& volume) {
  io::write_file(path, encode_volume(volume));
  write_key_values(sidecar_path(path), volume.meta);
}

Volume read_volume(const std::filesystem::path& path) {
  Volume v = decode_volume(io::read_file(path));
  if (std::filesystem::exists(sidecar_path(path))) v.meta = read_key_values(sidecar_path(path));
  v.validate();
  return v;
}

std::vector<Slice> slice_ingest(const Volume& volume) {
  volume.validate();
  const auto& d = volume.dims;
  const std::size_t axis = volume.readout_axis;
  // The two remaining axes, in order.
  std::size_t a = axis == 0 ? 1 : 0;
  std::size_t b = axis == 2 ? 1 : 2;
  std::vector<cdouble> data(volume.samples.begin(), volume.samples.end());

  const std::array<std::size_t, 3> stride{d[1] * d[2], d[2], 1};
  const std::size_t per_coil = d[0] * d[1] * d[2];
  if (volume.domain == Domain::KSpace) {
    std::vector<cdouble> line(d[axis]);
    for (std::size_t coil = 0; coil < volume.coils; ++coil) {
      cdouble* base = data.data() + coil * per_coil;
      for (std::size_t i = 0; i < d[a]; ++i) {
        for (std::size_t j = 0; j < d[b]; ++j) {
          const std::size_t offset = i * stride[a] + j * stride[b];
          for (std::size_t k = 0; k < d[axis]; ++k) line[k] = base[offset + k * stride[axis]];
          ifft1_centered(line);
          for (std::size_t k = 0; k < d[axis]; ++k) base[offset + k * stride[axis]] = line[k];
        }
      }
    }
  }

  std::vector<Slice> slices(d[axis]);
  for (std::size_t k = 0; k < d[axis]; ++k) {
    slices[k].index = k;
    for (std::size_t coil = 0; coil < volume.coils; ++coil) {
      ComplexImage img(d[a], d[b]);
      const cdouble* base = data.data() + coil * per_coil + k * stride[axis];
      for (std::size_t i = 0; i < d[a]; ++i)
        for (std::size_t j = 0; j < d[b]; ++j) img(i, j) = base[i * stride[a] + j * stride[b]];
      slices[k].coils.push_back(std::move(img));
    }
  }
  return slices;
}

}  // namespace rim
