#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "multiface/network.hpp"

namespace multiface {

// "MFCK", u16 version, then until EOF per parameter:
//   u16 name length, UTF-8 name, u8 rank, rank x u32 dims, f64 data (all LE).
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedParameter> params);
std::vector<NamedParameter> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::string& path, std::span<const NamedParameter> params);
std::vector<NamedParameter> load_checkpoint(const std::string& path);

/// Copies values into `into` by name; names and shapes must match exactly.
void restore_parameters(std::span<NamedParameter> into, std::span<const NamedParameter> from);

}  // namespace multiface
