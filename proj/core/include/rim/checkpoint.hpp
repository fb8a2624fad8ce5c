#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rim/keyvalue.hpp"
#include "rim/rim_net.hpp"

namespace rim {

/// "RIMC" checkpoint: magic, version byte, cell kind byte, u32 features,
/// u32 time steps, three u32 kernel sizes, u32 block count, then every
/// parameter block in declared order as little-endian f64.
std::vector<std::uint8_t> encode_checkpoint(const RimModel& model);
RimModel decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes the checkpoint and its `.meta` provenance sidecar.
void write_checkpoint(const std::filesystem::path& path, const RimModel& model, const KeyValues& metadata);
RimModel read_checkpoint(const std::filesystem::path& path);

}  // namespace rim
