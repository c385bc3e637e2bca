#include "multiface/multihead.hpp"

#include <cmath>

#include "multiface/errors.hpp"
#include "multiface/ops.hpp"

namespace multiface {

GroupSpec::GroupSpec(std::size_t dim_, std::size_t groups_) : dim(dim_), groups(groups_) { validate(); }

void GroupSpec::validate() const {
    if (groups < 1) throw ValueError("group count N must be >= 1");
    if (dim < 1) throw ValueError("embedding dim must be >= 1");
    if (dim % groups != 0) {
        throw ValueError("groups_do_not_divide", "N=" + std::to_string(groups) + " does not divide d=" +
                                                     std::to_string(dim));
    }
}

std::vector<Tensor> split_feature(const Tensor& x, const GroupSpec& spec) {
    spec.validate();
    if (x.rank() != 2 || x.dim(1) != spec.dim) {
        throw ShapeError("split_feature: features " + shape_string(x.shape()) + " do not have d=" +
                         std::to_string(spec.dim));
    }
    if (spec.groups == 1) return {x};
    std::vector<Tensor> parts;
    parts.reserve(spec.groups);
    for (std::size_t n = 0; n < spec.groups; ++n) {
        parts.push_back(ops::slice_columns(x, spec.group_begin(n), spec.group_begin(n) + spec.group_dim()));
    }
    return parts;
}

MultiHead MultiHead::create(std::size_t classes, const GroupSpec& spec, HeadLoss loss, const MarginConfig& margin,
                            std::mt19937_64& rng) {
    spec.validate();
    margin.validate();
    MultiHead mh;
    mh.margin = margin;
    mh.loss = loss;
    for (std::size_t n = 0; n < spec.groups; ++n) {
        mh.heads.push_back(ClassifierHead::create(classes, spec.group_dim(), loss == HeadLoss::softmax, rng));
    }
    return mh;
}

std::vector<Tensor> MultiHead::parameters() const {
    std::vector<Tensor> out;
    for (const auto& h : heads) {
        out.push_back(h.weight);
        if (h.bias) out.push_back(*h.bias);
    }
    return out;
}

void MultiHead::zero_grad() {
    for (auto& h : heads) {
        h.weight.zero_grad();
        if (h.bias) h.bias->zero_grad();
    }
}

MultiHeadLoss mlml_loss(const Tensor& x, std::span<const int> labels, const MultiHead& mh, const GroupSpec& spec) {
    if (mh.heads.size() != spec.groups) {
        throw ShapeError("mlml_loss: " + std::to_string(mh.heads.size()) + " heads for N=" +
                         std::to_string(spec.groups));
    }
    const auto parts = split_feature(x, spec);
    MultiHeadLoss result;
    for (std::size_t n = 0; n < spec.groups; ++n) {
        const auto& head = mh.heads[n];
        if (head.feature_dim() != spec.group_dim()) {
            throw ShapeError("mlml_loss: head " + std::to_string(n) + " expects " +
                             std::to_string(head.feature_dim()) + "-dim groups, got " +
                             std::to_string(spec.group_dim()));
        }
        Tensor term = mh.loss == HeadLoss::softmax ? softmax_loss(linear_logits(head, parts[n]), labels)
                                                   : lml_loss(parts[n], labels, head, mh.margin);
        result.per_head.push_back(term.item());
        result.total = n == 0 ? term : ops::add(result.total, term);
    }
    return result;
}

std::vector<double> head_gradient_stats(const MultiHead& mh) {
    std::vector<double> stats;
    for (std::size_t n = 0; n < mh.heads.size(); ++n) {
        const Tensor& w = mh.heads[n].weight;
        if (!w.has_grad()) throw ValueError("missing_gradient", "head " + std::to_string(n) + " has no gradient");
        double acc = 0.0;
        for (double g : w.grad()) acc += std::abs(g);
        stats.push_back(acc / static_cast<double>(w.size()));
    }
    return stats;
}

double mean_cross_group_cosine(std::span<const double> rows, std::size_t count, const GroupSpec& spec) {
    spec.validate();
    if (rows.size() != count * spec.dim) throw ShapeError("mean_cross_group_cosine: size mismatch");
    if (spec.groups < 2 || count == 0) return 0.0;
    const std::size_t k = spec.group_dim();
    double total = 0.0;
    std::size_t terms = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double* row = rows.data() + i * spec.dim;
        for (std::size_t a = 0; a < spec.groups; ++a)
            for (std::size_t b = a + 1; b < spec.groups; ++b) {
                double dot = 0.0, na = 0.0, nb = 0.0;
                for (std::size_t j = 0; j < k; ++j) {
                    const double u = row[a * k + j], v = row[b * k + j];
                    dot += u * v;
                    na += u * u;
                    nb += v * v;
                }
                if (na > 0.0 && nb > 0.0) {
                    total += std::abs(dot) / std::sqrt(na * nb);
                    ++terms;
                }
            }
    }
    return terms ? total / static_cast<double>(terms) : 0.0;
}

}  // namespace multiface
