#include "multiface/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "json.hpp"
#include "multiface/embeddings.hpp"
#include "multiface/errors.hpp"
#include "multiface/pairs.hpp"

namespace multiface {

using nlohmann::json;

EvalMetric parse_eval_metric(std::string_view text) {
    if (text == "verify") return EvalMetric::verify;
    if (text == "tar" || text == "tar@far") return EvalMetric::tar;
    if (text == "rank1") return EvalMetric::rank1;
    if (text == "angles") return EvalMetric::angles;
    throw ValueError("unknown_metric", "unknown metric '" + std::string(text) + "'");
}

std::string_view to_string(EvalMetric metric) {
    switch (metric) {
        case EvalMetric::verify: return "verify";
        case EvalMetric::tar: return "tar";
        case EvalMetric::rank1: return "rank1";
        case EvalMetric::angles: return "angles";
    }
    return "?";
}

namespace {

// JSON has no infinities; thresholds at the ends of the sweep become strings.
json number_or_string(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

void check_pairs(const PairSet& pairs, const EmbeddingTable& table) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].a >= table.count || pairs[i].b >= table.count) {
            throw ValueError("pair_out_of_range", "pair " + std::to_string(i) + " references row " +
                                                      std::to_string(std::max(pairs[i].a, pairs[i].b)) +
                                                      " but the table has " + std::to_string(table.count) +
                                                      " rows");
        }
    }
}

PairSet require_pairs(const EvalRequest& r, const EmbeddingTable& table) {
    if (r.pairs_path.empty()) {
        throw ValueError("missing_pairs", "metric '" + std::string(to_string(r.metric)) + "' needs --pairs");
    }
    PairSet pairs = load_pairs(r.pairs_path);
    check_pairs(pairs, table);
    return pairs;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw FormatError("write_failed", "cannot write " + path);
}

}  // namespace

std::string angles_csv(const AngleStats& stats) {
    std::string out = "bin_start_deg,positive_count,negative_count\n";
    for (std::size_t b = 0; b < kAngleBins; ++b) {
        out += std::to_string(b) + ',' + std::to_string(stats.positive_hist[b]) + ',' +
               std::to_string(stats.negative_hist[b]) + '\n';
    }
    return out;
}

std::pair<EmbeddingTable, EmbeddingTable> split_first_per_identity(const EmbeddingTable& table) {
    std::set<std::uint32_t> seen;
    std::vector<std::size_t> gallery_rows, probe_rows;
    for (std::size_t i = 0; i < table.count; ++i) {
        (seen.insert(table.labels[i]).second ? gallery_rows : probe_rows).push_back(i);
    }
    return {table.subset(gallery_rows), table.subset(probe_rows)};
}

std::string eval_run(const EvalRequest& r) {
    const EmbeddingTable table = load_embeddings(r.embeddings_path);
    if (r.groups && *r.groups != table.groups) {
        throw ShapeError("embedding file has " + std::to_string(table.groups) + " groups of dim " +
                         std::to_string(table.dim) + ", requested N = " + std::to_string(*r.groups));
    }
    json report{{"metric", to_string(r.metric)},
                {"mode", to_string(r.mode)},
                {"embeddings", r.embeddings_path},
                {"count", table.count},
                {"dim", table.dim},
                {"groups", table.groups}};

    switch (r.metric) {
        case EvalMetric::verify: {
            const PairSet pairs = require_pairs(r, table);
            std::vector<bool> same;
            for (const Pair& p : pairs) same.push_back(p.same);
            const VerificationResult v = verification_accuracy(pair_scores(table, pairs, r.mode), same);
            report["pairs"] = pairs.size();
            report["accuracy"] = v.accuracy;
            report["threshold"] = number_or_string(v.threshold);
            break;
        }
        case EvalMetric::tar: {
            const PairSet pairs = require_pairs(r, table);
            const std::vector<double> scores = pair_scores(table, pairs, r.mode);
            std::vector<double> pos, neg;
            for (std::size_t i = 0; i < pairs.size(); ++i) (pairs[i].same ? pos : neg).push_back(scores[i]);
            report["far"] = r.far;
            report["positives"] = pos.size();
            report["negatives"] = neg.size();
            report["tar"] = tar_at_far(pos, neg, r.far);
            break;
        }
        case EvalMetric::rank1: {
            EmbeddingTable gallery, probes;
            if (r.gallery_path.empty()) {
                std::tie(gallery, probes) = split_first_per_identity(table);
                report["gallery_source"] = "first sample per identity";
            } else {
                gallery = load_embeddings(r.gallery_path);
                probes = table;
                if (gallery.dim != probes.dim || gallery.groups != probes.groups) {
                    throw ShapeError("gallery file has dim " + std::to_string(gallery.dim) + " / " +
                                     std::to_string(gallery.groups) + " groups, probes have dim " +
                                     std::to_string(probes.dim) + " / " + std::to_string(probes.groups));
                }
                report["gallery_source"] = r.gallery_path;
            }
            report["probes"] = probes.count;
            report["gallery"] = gallery.count;
            report["rank1"] = rank1_identification(probes, gallery, r.mode);
            break;
        }
        case EvalMetric::angles: {
            const PairSet pairs = require_pairs(r, table);
            const AngleStats stats = angle_stats(table, pairs, r.mode);
            report["positive_count"] = stats.positive_count;
            report["negative_count"] = stats.negative_count;
            report["positive_mean_deg"] = stats.positive_mean_deg;
            report["negative_mean_deg"] = stats.negative_mean_deg;
            if (!r.histogram_path.empty()) {
                write_text(r.histogram_path, angles_csv(stats));
                report["histogram"] = r.histogram_path;
            }
            break;
        }
    }
    return report.dump() + "\n";
}

std::string capacity_report(std::size_t n, double theta, CapMode mode) {
    const CapacityResult res = max_points({n, theta}, mode);
    const double ln10 = std::numbers::ln10;
    json report{{"n", n},
                {"theta", theta},
                {"log10_S_n", res.log_sphere_area / ln10},
                {"log10_cap", res.log_cap_area / ln10},
                {"log10_m_star", res.m_star_decimal_exponent},
                {"mode", to_string(mode)}};
    if (n == 128 && std::abs(theta - std::numbers::pi / 3.0) < 1e-9) {
        report["paper_reference"] = "the paper quotes m* ~ 10^22 for n = 128, theta = pi/3";
    }
    return report.dump() + "\n";
}

}  // namespace multiface
