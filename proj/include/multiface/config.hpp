#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "multiface/losses.hpp"
#include "multiface/multihead.hpp"
#include "multiface/network.hpp"
#include "multiface/optimizer.hpp"
#include "multiface/synthetic.hpp"

namespace multiface {

enum class DatasetKind { mnist, synthetic };

enum class LossKind {
    softmax,  // one linear head with bias over the whole embedding
    lml,      // one large-margin head over the whole embedding
    mlml,     // N heads over contiguous slices, see head_loss
};

std::string_view to_string(DatasetKind kind);
std::string_view to_string(LossKind kind);
std::string_view to_string(HeadLoss kind);

/// Everything a training run depends on. Defaults follow the large-scale
/// face settings; `mnist_preset` gives the desk-scale MNIST run.
struct RunConfig {
    DatasetKind dataset = DatasetKind::mnist;
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    SyntheticIdentitySpec synthetic;

    std::string network_name = "lenet";  // "lenet", "mlp" or "custom"
    NetworkSpec network;                 // resolved by `resolve_network`
    std::vector<std::size_t> mlp_hidden{64};

    LossKind loss = LossKind::mlml;
    HeadLoss head_loss = HeadLoss::large_margin;  // per-head loss under mlml
    std::string margin_preset = "cosface";
    double scale = kDefaultScale;
    double margin = 0.3;
    std::size_t groups = 4;
    std::size_t embedding_dim = 32;

    std::size_t batch_size = 180;
    std::uint64_t total_steps = 0;
    double base_lr = 0.05;
    std::vector<Milestone> milestones{{320000, 10.0}, {480000, 10.0}, {580000, 10.0}};
    double momentum = 0.9;
    double weight_decay = 4e-5;
    std::uint64_t seed = 0;
    std::uint64_t eval_every = 100;
    std::size_t augment_shift = 0;  // random translation of MNIST digits, in pixels
    double dropout = 0.4;  // before the embedding layer; 0 disables
    std::string output_dir = "runs/default";

    /// Number of loss heads the run actually trains.
    std::size_t head_count() const { return loss == LossKind::mlml ? groups : 1; }
    MarginConfig margin_config() const;
    GroupSpec group_spec() const { return GroupSpec(embedding_dim, head_count()); }

    /// Fills `network` from `network_name` unless it is "custom".
    void resolve_network();

    /// Checks every invariant; throws ValueError naming the field.
    void validate() const;
};

/// Strict parse: unknown keys, wrong types and a missing seed are errors.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

SyntheticIdentitySpec parse_synthetic_spec(std::string_view json_text);
SyntheticIdentitySpec load_synthetic_spec(const std::string& path);

/// Desk-scale MNIST run: LeNet-style net, d = 32, step decay at 60% / 85%.
/// `groups == 0` selects the plain softmax baseline, otherwise Multi-Softmax.
RunConfig mnist_preset(const std::string& data_dir, std::size_t groups, std::uint64_t seed,
                       std::uint64_t total_steps);

}  // namespace multiface
