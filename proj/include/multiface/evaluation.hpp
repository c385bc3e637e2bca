#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "multiface/capacity.hpp"
#include "multiface/similarity.hpp"

namespace multiface {

enum class EvalMetric { verify, tar, rank1, angles };

EvalMetric parse_eval_metric(std::string_view text);
std::string_view to_string(EvalMetric metric);

struct EvalRequest {
    EvalMetric metric = EvalMetric::verify;
    std::string embeddings_path;
    std::string pairs_path;    // verify, tar, angles
    std::string gallery_path;  // rank1; empty = first sample of each identity
    double far = 1e-3;
    SimilarityMode mode = SimilarityMode::group_cosine;
    std::optional<std::size_t> groups;  // must match the file when given
    std::string histogram_path;         // angles CSV; empty = no file
};

/// Loads the inputs, runs the protocol and returns a JSON report.
std::string eval_run(const EvalRequest& request);

/// CSV with columns bin_start_deg, positive_count, negative_count.
std::string angles_csv(const AngleStats& stats);

/// Splits a table into a gallery holding the first sample of each identity
/// and probes holding the rest.
std::pair<EmbeddingTable, EmbeddingTable> split_first_per_identity(const EmbeddingTable& table);

/// JSON report {n, theta, log10_S_n, log10_cap, log10_m_star, mode, ...}.
std::string capacity_report(std::size_t n, double theta, CapMode mode);

}  // namespace multiface
