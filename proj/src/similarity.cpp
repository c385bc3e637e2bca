#include "multiface/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <string>

#include "multiface/errors.hpp"
#include "multiface/ops.hpp"

namespace multiface {

SimilarityMode parse_similarity_mode(std::string_view text) {
    if (text == "raw-dot") return SimilarityMode::raw_dot;
    if (text == "group-cosine") return SimilarityMode::group_cosine;
    throw ValueError("unknown_mode", "unknown similarity mode '" + std::string(text) + "'");
}

std::string_view to_string(SimilarityMode mode) {
    return mode == SimilarityMode::raw_dot ? "raw-dot" : "group-cosine";
}

void EmbeddingTable::validate() const {
    if (groups < 1 || (dim > 0 && dim % groups != 0)) {
        throw ValueError("groups_do_not_divide", "N=" + std::to_string(groups) + " does not divide d=" +
                                                     std::to_string(dim));
    }
    if (values.size() != count * dim) throw ShapeError("embedding table values do not match count x dim");
    if (labels.size() != count) throw ShapeError("embedding table labels do not match count");
}

EmbeddingTable EmbeddingTable::subset(std::span<const std::size_t> rows) const {
    EmbeddingTable out;
    out.dim = dim;
    out.groups = groups;
    for (std::size_t r : rows) {
        if (r >= count) throw ValueError("index_out_of_range", "row " + std::to_string(r) + " outside table");
        auto src = row(r);
        out.values.insert(out.values.end(), src.begin(), src.end());
        out.labels.push_back(labels[r]);
        ++out.count;
    }
    return out;
}

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

double grouped_similarity(std::span<const double> a, std::span<const double> b, std::size_t groups,
                          SimilarityMode mode) {
    if (a.size() != b.size()) throw ShapeError("grouped_similarity: vectors differ in length");
    if (groups < 1 || a.size() % groups != 0) {
        throw ValueError("groups_do_not_divide", "N=" + std::to_string(groups) + " does not divide d=" +
                                                     std::to_string(a.size()));
    }
    const std::size_t k = a.size() / groups;
    double total = 0.0;
    for (std::size_t n = 0; n < groups; ++n) {
        const double* pa = a.data() + n * k;
        const double* pb = b.data() + n * k;
        if (mode == SimilarityMode::raw_dot) {
            total += dot(pa, pb, k);
            continue;
        }
        const double na = std::sqrt(dot(pa, pa, k));
        const double nb = std::sqrt(dot(pb, pb, k));
        if (!(na >= ops::kNormEps) || !(nb >= ops::kNormEps)) {
            throw ValueError("zero_norm_row", "group " + std::to_string(n) + " has a zero sub-vector");
        }
        total += std::clamp(dot(pa, pb, k) / (na * nb), -1.0, 1.0);
    }
    return mode == SimilarityMode::raw_dot ? total : total / static_cast<double>(groups);
}

std::vector<double> pair_scores(const EmbeddingTable& table, const PairSet& pairs, SimilarityMode mode) {
    table.validate();
    std::vector<double> scores;
    scores.reserve(pairs.size());
    for (const Pair& p : pairs) {
        if (p.a >= table.count || p.b >= table.count) {
            throw ValueError("index_out_of_range", "pair (" + std::to_string(p.a) + "," + std::to_string(p.b) +
                                                       ") outside table of " + std::to_string(table.count));
        }
        scores.push_back(grouped_similarity(table.row(p.a), table.row(p.b), table.groups, mode));
    }
    return scores;
}

double pair_angle_degrees(std::span<const double> a, std::span<const double> b, std::size_t groups,
                          SimilarityMode mode) {
    const double sim = mode == SimilarityMode::group_cosine
                           ? grouped_similarity(a, b, groups, SimilarityMode::group_cosine)
                           : grouped_similarity(a, b, 1, SimilarityMode::group_cosine);
    return std::acos(std::clamp(sim, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

AngleStats angle_stats(const EmbeddingTable& table, const PairSet& pairs, SimilarityMode mode) {
    table.validate();
    AngleStats stats;
    double pos_sum = 0.0, neg_sum = 0.0;
    for (const Pair& p : pairs) {
        if (p.a >= table.count || p.b >= table.count) {
            throw ValueError("index_out_of_range", "pair (" + std::to_string(p.a) + "," + std::to_string(p.b) +
                                                       ") outside table of " + std::to_string(table.count));
        }
        const double angle = pair_angle_degrees(table.row(p.a), table.row(p.b), table.groups, mode);
        const auto bin = std::min<std::size_t>(static_cast<std::size_t>(angle), kAngleBins - 1);
        if (p.same) {
            ++stats.positive_hist[bin];
            ++stats.positive_count;
            pos_sum += angle;
        } else {
            ++stats.negative_hist[bin];
            ++stats.negative_count;
            neg_sum += angle;
        }
    }
    if (stats.positive_count) stats.positive_mean_deg = pos_sum / static_cast<double>(stats.positive_count);
    if (stats.negative_count) stats.negative_mean_deg = neg_sum / static_cast<double>(stats.negative_count);
    return stats;
}

VerificationResult verification_accuracy(std::span<const double> scores, const std::vector<bool>& same) {
    if (scores.empty()) throw ValueError("empty_input", "verification_accuracy: no scores");
    if (scores.size() != same.size()) throw ShapeError("verification_accuracy: scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

    const auto positives = static_cast<std::size_t>(std::count(same.begin(), same.end(), true));
    if (positives == 0 || positives == same.size()) {
        throw ValueError("single_label", "verification_accuracy needs both positive and negative pairs");
    }
    const double n = static_cast<double>(scores.size());
    // Threshold -inf: everything predicted "same".
    long correct = static_cast<long>(positives);
    VerificationResult best{static_cast<double>(correct) / n, -std::numeric_limits<double>::infinity()};
    long best_correct = correct;
    for (std::size_t i = 0; i < order.size();) {
        const double value = scores[order[i]];
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == value) {
            correct += same[order[j]] ? -1 : 1;
            ++j;
        }
        const double threshold = j < order.size() ? (value + scores[order[j]]) / 2.0
                                                  : std::numeric_limits<double>::infinity();
        if (correct > best_correct) {
            best_correct = correct;
            best = {static_cast<double>(correct) / n, threshold};
        }
        i = j;
    }
    return best;
}

double tar_at_far(std::span<const double> positives, std::span<const double> negatives, double far) {
    if (positives.empty() || negatives.empty()) throw ValueError("empty_input", "tar_at_far: empty score list");
    if (!(far >= 0.0 && far <= 1.0)) throw ValueError("tar_at_far: far must be in [0,1]");
    std::vector<double> neg(negatives.begin(), negatives.end());
    std::sort(neg.begin(), neg.end(), std::greater<>());
    const std::size_t m = neg.size();
    std::size_t admitted = 0;
    while (admitted < m && static_cast<double>(admitted + 1) / static_cast<double>(m) <= far) ++admitted;
    if (admitted == m) return 1.0;
    // Smallest admissible threshold lies just above the first excluded negative.
    const double bound = neg[admitted];
    const auto accepted = std::count_if(positives.begin(), positives.end(), [&](double s) { return s > bound; });
    return static_cast<double>(accepted) / static_cast<double>(positives.size());
}

double rank1_identification(const EmbeddingTable& probes, const EmbeddingTable& gallery, SimilarityMode mode) {
    probes.validate();
    gallery.validate();
    if (probes.dim != gallery.dim || probes.groups != gallery.groups) {
        throw ShapeError("rank1_identification: probe and gallery tables differ in dim or groups");
    }
    if (probes.count == 0) throw ValueError("empty_input", "rank1_identification: no probes");
    const std::set<std::uint32_t> known(gallery.labels.begin(), gallery.labels.end());
    std::set<std::uint32_t> missing;
    for (auto id : probes.labels)
        if (!known.contains(id)) missing.insert(id);
    if (!missing.empty()) {
        std::string list;
        for (auto id : missing) list += (list.empty() ? "" : ",") + std::to_string(id);
        throw ValueError("identity_missing", "probe identities missing from gallery: " + list);
    }
    std::size_t hits = 0;
    for (std::size_t p = 0; p < probes.count; ++p) {
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < gallery.count; ++g) {
            const double s = grouped_similarity(probes.row(p), gallery.row(g), probes.groups, mode);
            if (s > best_score) {
                best_score = s;
                best = g;
            }
        }
        if (gallery.labels[best] == probes.labels[p]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(probes.count);
}

}  // namespace multiface
