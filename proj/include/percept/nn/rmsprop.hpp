#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace percept::nn {

/// RMSProp with per-step exponential learning-rate decay.
struct OptimizerState {
    std::vector<std::vector<double>> accumulators;  // one per parameter span
    double learning_rate = 1e-4;
    double decay_factor = 1.0 - 1e-4;
    double rho = 0.9;
    double epsilon = 1e-8;
    std::size_t steps = 0;

    void validate() const;
};

/// v <- rho*v + (1-rho)*g^2; p <- p - lr*g/(sqrt(v)+eps); then lr <- lr*decay.
/// Accumulators are created on the first step.
template <typename T>
void rmsprop_step(std::span<const std::span<T>> params, std::span<const std::span<const T>> grads,
                  OptimizerState& state);

}  // namespace percept::nn
