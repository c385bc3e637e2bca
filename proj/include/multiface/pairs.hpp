#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>

#include "multiface/similarity.hpp"

namespace multiface {

/// Text format: one "index_a index_b label" per line, label 0 or 1,
/// whitespace separated; '#' starts a comment.
PairSet parse_pairs(std::string_view text);
std::string format_pairs(const PairSet& pairs);

PairSet load_pairs(const std::string& path);
void save_pairs(const PairSet& pairs, const std::string& path);

/// `per_kind` distinct positive pairs followed by `per_kind` distinct negative
/// pairs (a < b) drawn from `labels`. Throws when either kind has fewer than
/// `per_kind` candidates.
PairSet make_balanced_pairs(std::span<const std::uint32_t> labels, std::size_t per_kind, std::mt19937_64& rng);

}  // namespace multiface
