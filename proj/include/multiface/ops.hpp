#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "multiface/tensor.hpp"

// Differentiable operations. Each records its backward closure when any input
// requires a gradient.
namespace multiface::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// [m,k] x [n,k]^T -> [m,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// x [B,in], weight [out,in], bias [out] -> x W^T + b
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor* bias = nullptr);

Tensor relu(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);

/// x [B,C,H,W], weight [O,C,K,K], bias [O]; no padding.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride);
/// Non-overlapping max pooling (stride == kernel, trailing rows/cols dropped).
Tensor max_pool2d(const Tensor& x, std::size_t kernel);
/// Inverted dropout; identity when !training or rate == 0.
Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng);

Tensor reshape(const Tensor& x, Shape shape);
/// Keeps the leading axis, folds the rest.
Tensor flatten(const Tensor& x);

inline constexpr double kNormEps = 1e-12;

/// Normalizes each row (last axis) to unit Euclidean norm. Rows with norm
/// below `eps` raise ValueError naming the row.
Tensor l2_normalize(const Tensor& x, double eps = kNormEps);

/// Columns [begin, end) of a matrix.
Tensor slice_columns(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_columns(std::span<const Tensor> parts);

/// Mean over rows of -log softmax(logits)[label], max-subtracted.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

}  // namespace multiface::ops
