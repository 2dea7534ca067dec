#include "percept/nn/rmsprop.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace percept::nn {

void OptimizerState::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("rmsprop: learning rate must be > 0");
    if (!(decay_factor > 0.0 && decay_factor <= 1.0))
        throw std::invalid_argument("rmsprop: decay factor must lie in (0, 1]");
    if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rmsprop: rho must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("rmsprop: epsilon must be > 0");
}

template <typename T>
void rmsprop_step(std::span<const std::span<T>> params, std::span<const std::span<const T>> grads,
                  OptimizerState& state) {
    state.validate();
    if (params.size() != grads.size())
        throw std::invalid_argument("rmsprop: parameter/gradient list lengths differ");
    if (state.accumulators.empty()) {
        state.accumulators.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i)
            state.accumulators[i].assign(params[i].size(), 0.0);
    }
    if (state.accumulators.size() != params.size())
        throw std::invalid_argument("rmsprop: optimizer state does not match parameters");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].size() != grads[i].size() || params[i].size() != state.accumulators[i].size())
            throw std::invalid_argument("rmsprop: shape mismatch in parameter " + std::to_string(i));

    const double lr = state.learning_rate;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& v = state.accumulators[i];
        for (std::size_t j = 0; j < params[i].size(); ++j) {
            const double g = static_cast<double>(grads[i][j]);
            v[j] = state.rho * v[j] + (1.0 - state.rho) * g * g;
            params[i][j] = static_cast<T>(static_cast<double>(params[i][j]) -
                                          lr * g / (std::sqrt(v[j]) + state.epsilon));
        }
    }
    state.learning_rate *= state.decay_factor;
    ++state.steps;
}

template void rmsprop_step(std::span<const std::span<float>>, std::span<const std::span<const float>>,
                           OptimizerState&);
template void rmsprop_step(std::span<const std::span<double>>,
                           std::span<const std::span<const double>>, OptimizerState&);

}  // namespace percept::nn
