#include "multiface/optimizer.hpp"

#include "multiface/errors.hpp"

namespace multiface {

OptimizerState::OptimizerState(std::span<const Tensor> params, double momentum_, double weight_decay_,
                               std::vector<Milestone> milestones)
    : momentum(momentum_), weight_decay(weight_decay_), lr_milestones(std::move(milestones)) {
    validate_milestones(lr_milestones);
    velocity.reserve(params.size());
    for (const Tensor& p : params) velocity.emplace_back(p.size(), 0.0);
}

void validate_milestones(std::span<const Milestone> milestones) {
    for (std::size_t i = 0; i < milestones.size(); ++i) {
        if (!(milestones[i].divisor > 0.0)) throw ValueError("milestone divisor must be positive");
        if (i > 0 && milestones[i].step <= milestones[i - 1].step) {
            throw ValueError("milestones must be strictly increasing in step");
        }
    }
}

void sgd_step(std::span<Tensor> params, OptimizerState& state, double lr) {
    if (state.velocity.size() != params.size()) {
        throw ShapeError("sgd_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(state.velocity.size()) + " velocity buffers");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params[i];
        auto& v = state.velocity[i];
        if (v.size() != p.size()) {
            throw ShapeError("sgd_step: velocity " + std::to_string(i) + " has " + std::to_string(v.size()) +
                             " entries, parameter " + shape_string(p.shape()));
        }
        const bool has_grad = p.has_grad();
        std::span<const double> g = has_grad ? p.grad() : std::span<const double>{};
        std::span<double> w = p.mutable_data();
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double grad = (has_grad ? g[j] : 0.0) + state.weight_decay * w[j];
            v[j] = state.momentum * v[j] + grad;
            w[j] -= lr * v[j];
        }
    }
}

double lr_at_step(std::uint64_t step, double base_lr, std::span<const Milestone> milestones) {
    double lr = base_lr;
    for (const Milestone& m : milestones) {
        if (step >= m.step) lr /= m.divisor;
    }
    return lr;
}

}  // namespace multiface
