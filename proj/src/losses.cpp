#include "multiface/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "multiface/errors.hpp"
#include "multiface/ops.hpp"

namespace multiface {

using detail::Node;

void MarginConfig::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ValueError("margin scale s must be > 0");
    if (!(m1 >= 1.0) || !std::isfinite(m1)) throw ValueError("multiplicative margin m1 must be >= 1");
    if (!(m2 >= 0.0 && m2 < std::numbers::pi)) throw ValueError("additive angular margin m2 must be in [0, pi)");
    if (!std::isfinite(m3)) throw ValueError("additive cosine margin m3 must be finite");
}

MarginConfig preset_config(std::string_view kind, double scale, double margin) {
    if (!(margin >= 0.0)) throw ValueError("margin must be >= 0");
    MarginConfig cfg;
    cfg.scale = scale;
    if (kind == "softmax-cos") {
    } else if (kind == "sphereface") {
        cfg.m1 = margin;
    } else if (kind == "cosface") {
        cfg.m3 = -margin;
    } else if (kind == "arcface") {
        cfg.m2 = margin;
    } else {
        throw ValueError("unknown_preset", "unknown margin preset '" + std::string(kind) + "'");
    }
    cfg.validate();
    return cfg;
}

ClassifierHead ClassifierHead::create(std::size_t classes, std::size_t feature_dim, bool use_bias,
                                      std::mt19937_64& rng) {
    if (classes < 2) throw ValueError("a classifier head needs at least 2 classes");
    if (feature_dim < 1) throw ValueError("a classifier head needs feature_dim >= 1");
    std::normal_distribution<double> normal(0.0, 0.01);
    std::vector<double> w(classes * feature_dim);
    for (double& v : w) v = normal(rng);
    ClassifierHead head{Tensor({classes, feature_dim}, std::move(w), true), std::nullopt};
    if (use_bias) head.bias = Tensor({classes}, true);
    return head;
}

Tensor softmax_loss(const Tensor& logits, std::span<const int> labels) {
    return ops::softmax_cross_entropy(logits, labels);
}

Tensor linear_logits(const ClassifierHead& head, const Tensor& x) {
    return ops::linear(x, head.weight, head.bias ? &*head.bias : nullptr);
}

Tensor cosine_logits(const ClassifierHead& head, const Tensor& x) {
    if (x.rank() != 2 || x.dim(1) != head.feature_dim()) {
        throw ShapeError("cosine_logits: features " + shape_string(x.shape()) + " do not match head " +
                         shape_string(head.weight.shape()));
    }
    Tensor w_unit, x_unit;
    try {
        w_unit = ops::l2_normalize(head.weight);
    } catch (const ValueError& e) {
        throw ValueError(e.code(), std::string("weight: ") + e.what());
    }
    try {
        x_unit = ops::l2_normalize(x);
    } catch (const ValueError& e) {
        throw ValueError(e.code(), std::string("feature: ") + e.what());
    }
    return ops::clamp(ops::matmul_nt(x_unit, w_unit), -1.0, 1.0);
}

Tensor margin_logits(const Tensor& cosines, std::span<const int> labels, const MarginConfig& cfg) {
    cfg.validate();
    if (cosines.rank() != 2 || labels.size() != cosines.dim(0)) {
        throw ShapeError("margin_logits: " + std::to_string(labels.size()) + " labels for cosines " +
                         shape_string(cosines.shape()));
    }
    const std::size_t rows = cosines.dim(0), classes = cosines.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
        if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= classes) {
            throw ValueError("label_out_of_range", "label " + std::to_string(labels[r]) + " at row " +
                                                       std::to_string(r) + " outside [0," + std::to_string(classes) +
                                                       ")");
        }
    }
    const double s = cfg.scale;
    std::vector<double> out(cosines.size());
    // d(out)/d(cos) for each target entry; non-targets have slope s.
    auto target_slope = std::make_shared<std::vector<double>>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < classes; ++c) out[r * classes + c] = s * cosines.data()[r * classes + c];
        const std::size_t t = r * classes + static_cast<std::size_t>(labels[r]);
        const double cos_t = cosines.data()[t];
        if (cfg.is_identity_angle()) {
            out[t] = s * (cos_t + cfg.m3);
            (*target_slope)[r] = s;
            continue;
        }
        const double lo = -1.0 + kArccosEps, hi = 1.0 - kArccosEps;
        const double c_in = std::clamp(cos_t, lo, hi);
        const double theta = std::acos(c_in);
        double phi = cfg.m1 * theta + cfg.m2;
        bool flat = cos_t < lo || cos_t > hi;
        if (cfg.angle_clamp && (phi < 0.0 || phi > std::numbers::pi)) {
            phi = std::clamp(phi, 0.0, std::numbers::pi);
            flat = true;
        }
        out[t] = s * (std::cos(phi) + cfg.m3);
        (*target_slope)[r] = flat ? 0.0 : s * cfg.m1 * std::sin(phi) / std::sqrt(1.0 - c_in * c_in);
    }
    std::vector<int> label_copy(labels.begin(), labels.end());
    return Tensor::from_op(cosines.shape(), std::move(out), {cosines},
                           [target_slope, label_copy = std::move(label_copy), rows, classes, s](Node& self) {
                               auto& g = self.parents[0]->grad_buffer();
                               for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t c = 0; c < classes; ++c) {
                                       const std::size_t i = r * classes + c;
                                       const bool target = static_cast<std::size_t>(label_copy[r]) == c;
                                       g[i] += self.grad[i] * (target ? (*target_slope)[r] : s);
                                   }
                           });
}

Tensor lml_loss(const Tensor& x, std::span<const int> labels, const ClassifierHead& head, const MarginConfig& cfg) {
    if (head.bias) throw ValueError("large-margin heads must not carry a bias");
    return softmax_loss(margin_logits(cosine_logits(head, x), labels, cfg), labels);
}

}  // namespace multiface
