#pragma once

#include <random>
#include <span>
#include <vector>

#include "multiface/losses.hpp"
#include "multiface/tensor.hpp"

namespace multiface {

/// Equal contiguous split of a d-dim embedding into N groups.
struct GroupSpec {
    std::size_t dim = 0;
    std::size_t groups = 1;

    GroupSpec() = default;
    GroupSpec(std::size_t dim, std::size_t groups);  // validates

    std::size_t group_dim() const { return dim / groups; }
    std::size_t group_begin(std::size_t n) const { return n * group_dim(); }
    void validate() const;
};

/// Group n is columns [n*d/N, (n+1)*d/N). With N == 1 the input handle itself
/// is returned.
std::vector<Tensor> split_feature(const Tensor& x, const GroupSpec& spec);

/// Loss applied by every head.
enum class HeadLoss {
    softmax,       // x W^T + b, plain softmax cross-entropy
    large_margin,  // normalized cosine logits with the shared MarginConfig
};

/// N independent heads over the N groups.
struct MultiHead {
    std::vector<ClassifierHead> heads;
    MarginConfig margin;
    HeadLoss loss = HeadLoss::large_margin;

    static MultiHead create(std::size_t classes, const GroupSpec& spec, HeadLoss loss, const MarginConfig& margin,
                            std::mt19937_64& rng);

    std::vector<Tensor> parameters() const;
    void zero_grad();
};

struct MultiHeadLoss {
    Tensor total;
    std::vector<double> per_head;
};

/// Sum over heads of each head's loss on its own group. With N == 1 `total`
/// is the single head's loss tensor itself.
MultiHeadLoss mlml_loss(const Tensor& x, std::span<const int> labels, const MultiHead& mh, const GroupSpec& spec);

/// Mean |dL/dW^n| per head.
std::vector<double> head_gradient_stats(const MultiHead& mh);

/// Mean over rows and group pairs (n < m) of |cos(x^n, x^m)|. Diagnostic only.
double mean_cross_group_cosine(std::span<const double> rows, std::size_t count, const GroupSpec& spec);

}  // namespace multiface
