#pragma once

#include <cstdint>
#include <vector>

#include "multiface/similarity.hpp"

namespace multiface {

/// Gaussian identity clusters standing in for face identities.
struct SyntheticIdentitySpec {
    std::size_t identities = 16;
    std::size_t samples_per_identity = 20;
    std::size_t input_dim = 32;
    double center_dispersion = 1.0;  // std of identity centers
    double noise_scale = 0.3;        // std of within-identity noise
    std::uint64_t seed = 1;
    std::size_t eval_per_identity = 5;  // held out per identity
    std::size_t pairs_per_kind = 100;   // 0 disables pair generation

    void validate() const;
};

struct SyntheticDataset {
    std::size_t input_dim = 0;
    std::vector<double> train_inputs;  // train_count x input_dim
    std::vector<std::uint32_t> train_labels;
    std::vector<double> eval_inputs;
    std::vector<std::uint32_t> eval_labels;
    PairSet eval_pairs;  // indices into the eval split

    std::size_t train_count() const { return train_labels.size(); }
    std::size_t eval_count() const { return eval_labels.size(); }
    std::size_t total_count() const { return train_count() + eval_count(); }
};

/// Centers ~ N(0, dispersion^2 I), samples = center + N(0, noise^2 I). The
/// first `eval_per_identity` samples of each identity form the eval split.
/// Fully determined by `spec.seed`.
SyntheticDataset synth_identity_dataset(const SyntheticIdentitySpec& spec);

/// The eval split as an embedding table (inputs used as features).
EmbeddingTable eval_split_table(const SyntheticDataset& ds, std::size_t groups = 1);
EmbeddingTable train_split_table(const SyntheticDataset& ds, std::size_t groups = 1);

}  // namespace multiface
