#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "multiface/similarity.hpp"

namespace multiface {

// MFE1 layout (little-endian): "MFE1", u16 version, u32 count, u32 dim,
// u32 groups, count*dim f32 values, count u32 labels.
inline constexpr std::uint16_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 18;

/// Values are narrowed to f32; loading widens them back exactly.
std::vector<std::uint8_t> encode_embeddings(const EmbeddingTable& table);
EmbeddingTable decode_embeddings(std::span<const std::uint8_t> bytes);

void dump_embeddings(const EmbeddingTable& table, const std::string& path);
EmbeddingTable load_embeddings(const std::string& path);

}  // namespace multiface
