#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace multiface {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tensor;

namespace detail {

struct Node;
using BackwardFn = std::function<void(Node& self)>;

// One vertex of the computation graph. Non-leaf nodes keep their parents and
// a closure that scatters `grad` into the parents' grads.
struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    bool consumed = false;
    std::vector<std::shared_ptr<Node>> parents;
    BackwardFn backward;

    std::vector<double>& grad_buffer();
};

}  // namespace detail

/// Dense row-major double tensor with an optional gradient slot.
///
/// Tensors are cheap handles: copies share storage and graph position.
/// Operations in ops.hpp record the graph whenever any input requires a
/// gradient; `backward()` on a scalar walks it once and releases it.
/// Gradients of leaf tensors accumulate across backward passes until
/// `zero_grad()` is called.
class Tensor {
public:
    Tensor();
    explicit Tensor(Shape shape, bool requires_grad = false);
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor scalar(double value, bool requires_grad = false);

    /// Result of an operation. Parents and the closure are dropped when no
    /// parent requires a gradient.
    static Tensor from_op(Shape shape, std::vector<double> values,
                          std::vector<Tensor> parents, detail::BackwardFn backward);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const;

    std::span<const double> data() const;
    std::span<double> mutable_data();
    double item() const;
    double at(std::size_t flat_index) const;

    bool requires_grad() const;
    void set_requires_grad(bool value);
    bool has_grad() const;
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad();

    /// Backpropagates from this scalar into every reachable tensor that
    /// requires a gradient, then releases the graph.
    void backward() const;

    /// Copy of the values with no graph attached.
    Tensor detach() const;

    /// True when both handles refer to the same storage.
    bool same_storage(const Tensor& other) const { return node_ == other.node_; }

    const std::shared_ptr<detail::Node>& node() const { return node_; }

private:
    std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

    static bool active();

private:
    bool previous_;
};

}  // namespace multiface
