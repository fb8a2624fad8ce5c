#include "rim/checkpoint.hpp"

#include "rim/binary_io.hpp"
#include "rim/error.hpp"

namespace rim {
namespace {
constexpr std::uint8_t kCheckpointVersion = 1;
}

std::vector<std::uint8_t> encode_checkpoint(const RimModel& model) {
  io::ByteWriter w;
  w.bytes("RIMC");
  w.put<std::uint8_t>(kCheckpointVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(model.config().cell));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.config().features));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.config().time_steps));
  for (auto k : RimConfig::kKernelSizes) w.put<std::uint32_t>(static_cast<std::uint32_t>(k));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.blocks().size()));
  for (const auto& b : model.blocks())
    for (double v : b.value.data()) w.put<double>(v);
  return std::move(w.buffer());
}

RimModel decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.expect_magic("RIMC");
  std::size_t at = r.offset();
  if (r.get<std::uint8_t>("version") != kCheckpointVersion) throw ParseError("unsupported checkpoint version", at);
  at = r.offset();
  const auto kind = r.get<std::uint8_t>("cell kind");
  if (kind > static_cast<std::uint8_t>(CellKind::IndRNN)) throw ParseError("unknown cell kind", at);
  RimConfig config;
  config.cell = static_cast<CellKind>(kind);
  at = r.offset();
  config.features = r.get<std::uint32_t>("features");
  config.time_steps = r.get<std::uint32_t>("time steps");
  if (config.features == 0 || config.time_steps == 0) throw ParseError("zero features or time steps", at);
  for (auto k : RimConfig::kKernelSizes) {
    at = r.offset();
    if (r.get<std::uint32_t>("kernel size") != k) throw ParseError("kernel sizes do not match this build", at);
  }
  RimModel model(config);
  at = r.offset();
  if (r.get<std::uint32_t>("block count") != model.blocks().size()) throw ParseError("block count mismatch", at);
  for (auto& b : model.blocks())
    for (auto& v : b.value.data()) v = r.get<double>("parameters");
  r.expect_end();
  return model;
}

void write_checkpoint(const std::filesystem::path& path, const RimModel& model, const KeyValues& metadata) {
  io::write_file(path, encode_checkpoint(model));
  KeyValues meta = metadata;
  meta.set("cell", std::string(to_string(model.config().cell)));
  meta.set("features", std::to_string(model.config().features));
  meta.set("time_steps", std::to_string(model.config().time_steps));
  meta.set("parameters", std::to_string(model.parameter_count()));
  write_key_values(sidecar_path(path), meta);
}

RimModel read_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw_error(ErrorKind::Config, "checkpoint not found: " + path.string());
  return decode_checkpoint(io::read_file(path));
}

}  // namespace rim
