#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace multiface {

enum class SimilarityMode {
    raw_dot,       // sum_n <a^n, b^n>, i.e. the plain inner product
    group_cosine,  // mean_n cos(a^n, b^n), in [-1, 1]
};

SimilarityMode parse_similarity_mode(std::string_view text);
std::string_view to_string(SimilarityMode mode);

/// Row-major count x dim embeddings with identity labels and the group count
/// used at inference.
struct EmbeddingTable {
    std::size_t count = 0;
    std::size_t dim = 0;
    std::size_t groups = 1;
    std::vector<double> values;
    std::vector<std::uint32_t> labels;

    std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
    void validate() const;
    /// Rows selected by index, same dim/groups.
    EmbeddingTable subset(std::span<const std::size_t> rows) const;
};

struct Pair {
    std::size_t a = 0;
    std::size_t b = 0;
    bool same = false;

    bool operator==(const Pair&) const = default;
};
using PairSet = std::vector<Pair>;

double grouped_similarity(std::span<const double> a, std::span<const double> b, std::size_t groups,
                          SimilarityMode mode);

/// Scores for every pair; indices are checked against the table.
std::vector<double> pair_scores(const EmbeddingTable& table, const PairSet& pairs, SimilarityMode mode);

inline constexpr std::size_t kAngleBins = 180;  // 1 degree each over [0, 180]

struct AngleStats {
    std::array<std::size_t, kAngleBins> positive_hist{};
    std::array<std::size_t, kAngleBins> negative_hist{};
    std::size_t positive_count = 0;
    std::size_t negative_count = 0;
    double positive_mean_deg = 0.0;
    double negative_mean_deg = 0.0;
};

/// Per-pair angle in degrees. group_cosine mode uses the grouped cosine;
/// raw_dot mode uses the whole-vector cosine (a raw dot is not an angle).
double pair_angle_degrees(std::span<const double> a, std::span<const double> b, std::size_t groups,
                          SimilarityMode mode);
AngleStats angle_stats(const EmbeddingTable& table, const PairSet& pairs, SimilarityMode mode);

struct VerificationResult {
    double accuracy = 0.0;
    double threshold = 0.0;  // may be +-infinity
};

/// Best accuracy over thresholds at midpoints of consecutive distinct scores
/// plus -inf/+inf; "same" when score >= threshold; ties go to the smallest
/// threshold.
VerificationResult verification_accuracy(std::span<const double> scores, const std::vector<bool>& same);

/// Fraction of positives accepted at the smallest threshold whose
/// false-accept fraction on `negatives` is <= far.
double tar_at_far(std::span<const double> positives, std::span<const double> negatives, double far);

/// Fraction of probes whose most similar gallery row (lowest index on ties)
/// has the probe's label.
double rank1_identification(const EmbeddingTable& probes, const EmbeddingTable& gallery, SimilarityMode mode);

}  // namespace multiface
