#pragma once

#include <optional>
#include <random>
#include <span>
#include <string_view>

#include "multiface/tensor.hpp"

namespace multiface {

/// Target logit s * [cos(m1 * theta + m2) + m3]; other logits s * cos(theta).
///
/// m3 enters with a plus sign, so an additive-cosine penalty is stored as a
/// negative m3 (preset_config("cosface", s, 0.3) gives m3 = -0.3).
struct MarginConfig {
    double scale = 64.0;
    double m1 = 1.0;
    double m2 = 0.0;
    double m3 = 0.0;
    /// Clamp m1 * theta + m2 to [0, pi] so the target logit stays monotone.
    bool angle_clamp = true;

    void validate() const;
    bool is_identity_angle() const { return m1 == 1.0 && m2 == 0.0; }
};

inline constexpr double kDefaultScale = 64.0;
/// arccos input is kept inside [-1 + eps, 1 - eps] so d(theta)/d(cos) is finite.
inline constexpr double kArccosEps = 1e-12;

/// kind: "softmax-cos", "sphereface", "cosface" or "arcface". For sphereface
/// `margin` is the multiplicative m1 and must be >= 1.
MarginConfig preset_config(std::string_view kind, double scale, double margin);

/// Class-center matrix W [C, k] with an optional bias [C].
struct ClassifierHead {
    Tensor weight;
    std::optional<Tensor> bias;

    std::size_t classes() const { return weight.dim(0); }
    std::size_t feature_dim() const { return weight.dim(1); }

    /// Weights ~ Normal(0, 0.01); bias zero when requested.
    static ClassifierHead create(std::size_t classes, std::size_t feature_dim, bool use_bias, std::mt19937_64& rng);
};

/// Mean over the batch of -log softmax(logits)[label].
Tensor softmax_loss(const Tensor& logits, std::span<const int> labels);

/// x W^T + b for plain softmax heads.
Tensor linear_logits(const ClassifierHead& head, const Tensor& x);

/// cos(theta_{j,i}) for every (row i, class j), clamped to [-1, 1].
Tensor cosine_logits(const ClassifierHead& head, const Tensor& x);

/// Applies the margin to target entries and the scale to all entries.
Tensor margin_logits(const Tensor& cosines, std::span<const int> labels, const MarginConfig& cfg);

/// softmax_loss(margin_logits(cosine_logits(head, x))). Heads must be bias-free.
Tensor lml_loss(const Tensor& x, std::span<const int> labels, const ClassifierHead& head, const MarginConfig& cfg);

}  // namespace multiface
