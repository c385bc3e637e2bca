#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "multiface/config.hpp"
#include "multiface/similarity.hpp"

namespace multiface {

struct MetricsRow {
    std::uint64_t step = 0;  // optimizer steps completed
    double lr = 0.0;
    double train_loss = 0.0;
    std::vector<double> head_losses;
    std::vector<double> head_grads;
    double eval_accuracy = 0.0;
};

/// Header of metrics.csv; depends only on the head count.
std::vector<std::string> metrics_columns(std::size_t heads);
std::string format_metrics_row(const MetricsRow& row);

struct TrainResult {
    std::string run_dir;
    std::vector<MetricsRow> rows;
    std::vector<std::vector<double>> step_head_grads;  // one entry per step
    EmbeddingTable eval_embeddings;
    PairSet eval_pairs;
    double final_accuracy = 0.0;
};

/// Runs the full step loop and writes into `cfg.output_dir`:
///   config.json, metrics.csv, head_grads.csv, checkpoint.mfck,
///   embeddings_eval.mfe, eval_pairs.txt
/// All validation and data loading happen before step 0.
TrainResult train_run(const RunConfig& cfg);

/// Eval-split pair list used for MNIST runs; depends only on the labels.
inline constexpr std::size_t kMnistPairsPerKind = 3000;
inline constexpr std::uint64_t kMnistPairSeed = 0x5eed0fa1e5ULL;

}  // namespace multiface
