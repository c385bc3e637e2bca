#include "multiface/synthetic.hpp"

#include <random>

#include "multiface/errors.hpp"
#include "multiface/pairs.hpp"

namespace multiface {

void SyntheticIdentitySpec::validate() const {
    if (identities < 2) throw ValueError("synthetic spec needs at least 2 identities");
    if (input_dim < 1) throw ValueError("synthetic spec needs input_dim >= 1");
    if (!(noise_scale > 0.0)) throw ValueError("synthetic noise_scale must be > 0");
    if (!(center_dispersion >= 0.0)) throw ValueError("synthetic center_dispersion must be >= 0");
    if (eval_per_identity > samples_per_identity) {
        throw ValueError("eval_per_identity exceeds samples_per_identity");
    }
    if (pairs_per_kind > 0 && samples_per_identity < 2) {
        throw ValueError("too_few_samples", "pairs need at least 2 samples per identity");
    }
    if (pairs_per_kind > 0 && eval_per_identity < 2) {
        throw ValueError("too_few_samples", "positive eval pairs need eval_per_identity >= 2");
    }
}

SyntheticDataset synth_identity_dataset(const SyntheticIdentitySpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    SyntheticDataset ds;
    ds.input_dim = spec.input_dim;
    std::vector<double> center(spec.input_dim);
    for (std::size_t id = 0; id < spec.identities; ++id) {
        for (double& c : center) c = spec.center_dispersion * normal(rng);
        for (std::size_t s = 0; s < spec.samples_per_identity; ++s) {
            const bool eval = s < spec.eval_per_identity;
            auto& inputs = eval ? ds.eval_inputs : ds.train_inputs;
            auto& labels = eval ? ds.eval_labels : ds.train_labels;
            for (double c : center) inputs.push_back(c + spec.noise_scale * normal(rng));
            labels.push_back(static_cast<std::uint32_t>(id));
        }
    }
    if (spec.pairs_per_kind > 0) ds.eval_pairs = make_balanced_pairs(ds.eval_labels, spec.pairs_per_kind, rng);
    return ds;
}

namespace {

EmbeddingTable make_table(const std::vector<double>& values, const std::vector<std::uint32_t>& labels,
                          std::size_t dim, std::size_t groups) {
    EmbeddingTable t;
    t.count = labels.size();
    t.dim = dim;
    t.groups = groups;
    t.values = values;
    t.labels = labels;
    t.validate();
    return t;
}

}  // namespace

EmbeddingTable eval_split_table(const SyntheticDataset& ds, std::size_t groups) {
    return make_table(ds.eval_inputs, ds.eval_labels, ds.input_dim, groups);
}

EmbeddingTable train_split_table(const SyntheticDataset& ds, std::size_t groups) {
    return make_table(ds.train_inputs, ds.train_labels, ds.input_dim, groups);
}

}  // namespace multiface
