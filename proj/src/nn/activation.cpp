#include "percept/nn/activation.hpp"

#include <cmath>

namespace percept::nn {

template <typename T>
T sigmoid(T x) {
    // Branches keep exp() from overflowing for large |x|.
    if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
    const T e = std::exp(x);
    return e / (T{1} + e);
}

template <typename T>
Tensor<T> activation_forward(const Tensor<T>& input, Activation kind) {
    Tensor<T> out(input.dims());
    auto src = input.data();
    auto dst = out.data();
    if (kind == Activation::relu) {
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = relu(src[i]);
    } else {
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = sigmoid(src[i]);
    }
    return out;
}

template <typename T>
Tensor<T> activation_backward(const Tensor<T>& output, const Tensor<T>& grad_out,
                              Activation kind) {
    require_same_shape(output, grad_out, "activation backward");
    Tensor<T> grad_in(output.dims());
    auto y = output.data();
    auto dy = grad_out.data();
    auto dx = grad_in.data();
    if (kind == Activation::relu) {
        for (std::size_t i = 0; i < y.size(); ++i) dx[i] = y[i] > T{0} ? dy[i] : T{0};
    } else {
        for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * y[i] * (T{1} - y[i]);
    }
    return grad_in;
}

template float sigmoid(float);
template double sigmoid(double);
template Tensor<float> activation_forward(const Tensor<float>&, Activation);
template Tensor<double> activation_forward(const Tensor<double>&, Activation);
template Tensor<float> activation_backward(const Tensor<float>&, const Tensor<float>&, Activation);
template Tensor<double> activation_backward(const Tensor<double>&, const Tensor<double>&,
                                            Activation);

}  // namespace percept::nn
