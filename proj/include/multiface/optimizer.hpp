#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "multiface/tensor.hpp"

namespace multiface {

struct Milestone {
    std::uint64_t step = 0;
    double divisor = 10.0;
};

/// SGD with momentum; weight decay is folded into the gradient:
///   v <- momentum * v + (grad + weight_decay * param)
///   param <- param - lr * v
struct OptimizerState {
    std::vector<std::vector<double>> velocity;
    double momentum = 0.9;
    double weight_decay = 4e-5;
    std::vector<Milestone> lr_milestones;

    OptimizerState() = default;
    /// Zero velocity buffers shaped like `params`.
    OptimizerState(std::span<const Tensor> params, double momentum, double weight_decay,
                   std::vector<Milestone> milestones = {});
};

void validate_milestones(std::span<const Milestone> milestones);

/// One update. Parameters without a gradient are treated as having a zero
/// gradient (weight decay still applies).
void sgd_step(std::span<Tensor> params, OptimizerState& state, double lr);

/// base_lr divided by the divisors of every milestone with step <= `step`.
double lr_at_step(std::uint64_t step, double base_lr, std::span<const Milestone> milestones);

}  // namespace multiface
