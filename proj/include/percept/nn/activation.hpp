#pragma once

#include "percept/nn/tensor.hpp"

namespace percept::nn {

enum class Activation { relu, sigmoid };

template <typename T>
T relu(T x) {
    return x > T{0} ? x : T{0};
}

template <typename T>
T sigmoid(T x);

template <typename T>
Tensor<T> activation_forward(const Tensor<T>& input, Activation kind);

/// `output` is the forward result; both derivatives are expressed through it
/// (relu: output > 0, sigmoid: s * (1 - s)).
template <typename T>
Tensor<T> activation_backward(const Tensor<T>& output, const Tensor<T>& grad_out,
                              Activation kind);

}  // namespace percept::nn
