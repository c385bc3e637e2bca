#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "multiface/tensor.hpp"

namespace multiface {

struct Conv2dLayer {
    std::size_t out_channels = 0;
    std::size_t kernel = 0;
    std::size_t stride = 1;
};
struct MaxPoolLayer {
    std::size_t kernel = 2;
};
struct LinearLayer {
    std::size_t out_dim = 0;
};
struct ReluLayer {};
struct DropoutLayer {
    double rate = 0.0;
};
struct FlattenLayer {};

using LayerSpec = std::variant<Conv2dLayer, MaxPoolLayer, LinearLayer, ReluLayer, DropoutLayer, FlattenLayer>;

std::string layer_name(const LayerSpec& layer);

/// Ordered layer list plus the per-sample input shape ({C,H,W} for images,
/// {D} for vectors). The last layer must emit `embedding_dim` features.
struct NetworkSpec {
    Shape input_shape;
    std::vector<LayerSpec> layers;
    std::size_t embedding_dim = 0;

    /// Per-sample output shape after each layer; throws ShapeError naming the
    /// first layer that cannot accept its input.
    std::vector<Shape> infer_shapes() const;
    void validate() const;
};

/// 2x(conv5 + relu + pool2), hidden linear + relu, linear to `embedding_dim`.
NetworkSpec lenet_spec(std::size_t embedding_dim, double dropout_rate = 0.0);
/// Fully connected net on flat inputs.
NetworkSpec mlp_spec(std::size_t input_dim, std::vector<std::size_t> hidden, std::size_t embedding_dim);

struct NamedParameter {
    std::string name;
    Tensor value;
};

/// Parameters plus the spec that consumes them.
class Network {
public:
    /// He-normal weights (std sqrt(2/fan_in)), zero biases.
    Network(NetworkSpec spec, std::mt19937_64& rng);

    const NetworkSpec& spec() const { return spec_; }
    std::vector<NamedParameter>& parameters() { return params_; }
    const std::vector<NamedParameter>& parameters() const { return params_; }

    /// batch: [B, input_shape...] -> [B, embedding_dim]. `rng` drives
    /// dropout and is only touched when training with a nonzero rate.
    Tensor forward(const Tensor& batch, bool training, std::mt19937_64& rng) const;
    Tensor forward(const Tensor& batch) const;

private:
    NetworkSpec spec_;
    std::vector<NamedParameter> params_;
    std::vector<std::size_t> param_index_;  // first parameter of each layer
};

}  // namespace multiface
