#include "multiface/network.hpp"

#include <cmath>

#include "multiface/errors.hpp"
#include "multiface/ops.hpp"

namespace multiface {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

std::string describe(std::size_t index, const LayerSpec& layer) {
    return "layer " + std::to_string(index) + " (" + layer_name(layer) + ")";
}

Tensor he_normal(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    std::vector<double> values(numel(shape));
    for (double& v : values) v = normal(rng);
    return Tensor(std::move(shape), std::move(values), true);
}

}  // namespace

std::string layer_name(const LayerSpec& layer) {
    return std::visit(Overloaded{
                          [](const Conv2dLayer& l) {
                              return "conv2d{" + std::to_string(l.out_channels) + ",k" + std::to_string(l.kernel) +
                                     ",s" + std::to_string(l.stride) + "}";
                          },
                          [](const MaxPoolLayer& l) { return "maxpool{k" + std::to_string(l.kernel) + "}"; },
                          [](const LinearLayer& l) { return "linear{" + std::to_string(l.out_dim) + "}"; },
                          [](const ReluLayer&) { return std::string("relu"); },
                          [](const DropoutLayer& l) { return "dropout{" + std::to_string(l.rate) + "}"; },
                          [](const FlattenLayer&) { return std::string("flatten"); },
                      },
                      layer);
}

std::vector<Shape> NetworkSpec::infer_shapes() const {
    if (input_shape.empty() || numel(input_shape) == 0) throw ShapeError("network input shape is empty");
    std::vector<Shape> shapes;
    Shape cur = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& layer = layers[i];
        const std::string where = describe(i, layer);
        cur = std::visit(
            Overloaded{
                [&](const Conv2dLayer& l) -> Shape {
                    if (cur.size() != 3) throw ShapeError(where + " expects a CxHxW input, got " + shape_string(cur));
                    if (l.out_channels == 0 || l.kernel == 0 || l.stride == 0)
                        throw ShapeError(where + " has a zero size parameter");
                    if (l.kernel > cur[1] || l.kernel > cur[2])
                        throw ShapeError(where + " kernel larger than input " + shape_string(cur));
                    return {l.out_channels, (cur[1] - l.kernel) / l.stride + 1, (cur[2] - l.kernel) / l.stride + 1};
                },
                [&](const MaxPoolLayer& l) -> Shape {
                    if (cur.size() != 3) throw ShapeError(where + " expects a CxHxW input, got " + shape_string(cur));
                    if (l.kernel == 0 || l.kernel > cur[1] || l.kernel > cur[2])
                        throw ShapeError(where + " kernel does not fit input " + shape_string(cur));
                    return {cur[0], cur[1] / l.kernel, cur[2] / l.kernel};
                },
                [&](const LinearLayer& l) -> Shape {
                    if (cur.size() != 1) throw ShapeError(where + " expects a flat input, got " + shape_string(cur));
                    if (l.out_dim == 0) throw ShapeError(where + " has zero outputs");
                    return {l.out_dim};
                },
                [&](const ReluLayer&) -> Shape { return cur; },
                [&](const DropoutLayer& l) -> Shape {
                    if (!(l.rate >= 0.0 && l.rate < 1.0)) throw ValueError(where + " rate must be in [0,1)");
                    return cur;
                },
                [&](const FlattenLayer&) -> Shape { return {numel(cur)}; },
            },
            layer);
        shapes.push_back(cur);
    }
    return shapes;
}

void NetworkSpec::validate() const {
    const auto shapes = infer_shapes();
    const Shape& last = shapes.empty() ? input_shape : shapes.back();
    if (last.size() != 1 || last[0] != embedding_dim) {
        throw ShapeError("network output " + shape_string(last) + " does not match embedding_dim " +
                         std::to_string(embedding_dim));
    }
}

NetworkSpec lenet_spec(std::size_t embedding_dim, double dropout_rate) {
    NetworkSpec spec;
    spec.input_shape = {1, 28, 28};
    spec.layers = {Conv2dLayer{8, 5, 1}, ReluLayer{},      MaxPoolLayer{2}, Conv2dLayer{16, 5, 1},
                   ReluLayer{},          MaxPoolLayer{2},  FlattenLayer{},  LinearLayer{64},
                   ReluLayer{}};
    if (dropout_rate > 0.0) spec.layers.push_back(DropoutLayer{dropout_rate});
    spec.layers.push_back(LinearLayer{embedding_dim});
    spec.embedding_dim = embedding_dim;
    return spec;
}

NetworkSpec mlp_spec(std::size_t input_dim, std::vector<std::size_t> hidden, std::size_t embedding_dim) {
    NetworkSpec spec;
    spec.input_shape = {input_dim};
    for (std::size_t h : hidden) {
        spec.layers.push_back(LinearLayer{h});
        spec.layers.push_back(ReluLayer{});
    }
    spec.layers.push_back(LinearLayer{embedding_dim});
    spec.embedding_dim = embedding_dim;
    return spec;
}

Network::Network(NetworkSpec spec, std::mt19937_64& rng) : spec_(std::move(spec)) {
    spec_.validate();
    const auto shapes = spec_.infer_shapes();
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const Shape& in = i == 0 ? spec_.input_shape : shapes[i - 1];
        param_index_.push_back(params_.size());
        const std::string prefix = "layer" + std::to_string(i);
        if (const auto* conv = std::get_if<Conv2dLayer>(&spec_.layers[i])) {
            const std::size_t fan_in = in[0] * conv->kernel * conv->kernel;
            params_.push_back({prefix + ".weight", he_normal({conv->out_channels, in[0], conv->kernel, conv->kernel},
                                                             fan_in, rng)});
            params_.push_back({prefix + ".bias", Tensor({conv->out_channels}, true)});
        } else if (const auto* lin = std::get_if<LinearLayer>(&spec_.layers[i])) {
            params_.push_back({prefix + ".weight", he_normal({lin->out_dim, in[0]}, in[0], rng)});
            params_.push_back({prefix + ".bias", Tensor({lin->out_dim}, true)});
        }
    }
}

Tensor Network::forward(const Tensor& batch) const {
    std::mt19937_64 unused(0);
    return forward(batch, false, unused);
}

Tensor Network::forward(const Tensor& batch, bool training, std::mt19937_64& rng) const {
    Shape expected{batch.rank() > 0 ? batch.dim(0) : 0};
    expected.insert(expected.end(), spec_.input_shape.begin(), spec_.input_shape.end());
    if (batch.shape() != expected) {
        throw ShapeError("network input " + shape_string(batch.shape()) + " does not match expected [B]x" +
                         shape_string(spec_.input_shape) + " at " +
                         (spec_.layers.empty() ? std::string("input") : describe(0, spec_.layers[0])));
    }
    Tensor x = batch;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const auto& layer = spec_.layers[i];
        const std::size_t p = param_index_[i];
        try {
            x = std::visit(Overloaded{
                               [&](const Conv2dLayer& l) {
                                   return ops::conv2d(x, params_[p].value, params_[p + 1].value, l.stride);
                               },
                               [&](const MaxPoolLayer& l) { return ops::max_pool2d(x, l.kernel); },
                               [&](const LinearLayer&) {
                                   return ops::linear(x, params_[p].value, &params_[p + 1].value);
                               },
                               [&](const ReluLayer&) { return ops::relu(x); },
                               [&](const DropoutLayer& l) { return ops::dropout(x, l.rate, training, rng); },
                               [&](const FlattenLayer&) { return ops::flatten(x); },
                           },
                           layer);
        } catch (const ShapeError& e) {
            throw ShapeError(describe(i, layer) + ": " + e.what());
        }
    }
    return x;
}

}  // namespace multiface
