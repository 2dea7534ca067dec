#pragma once

#include <cstddef>
#include <vector>

#include "percept/nn/tensor.hpp"

namespace percept::nn {

/// Grouped 3x3 convolution, stride 1, zero padding 1, dilation 1.
/// Output channel o belongs to group o / (out_channels / groups) and reads
/// only the input channels of that group.
template <typename T>
struct ConvLayer {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t groups = 1;
    Tensor<T> weights;  // (out_channels, in_channels / groups, 3, 3)
    std::vector<T> bias;

    /// Zero-initialized layer; throws if groups does not divide both counts.
    static ConvLayer make(std::size_t in_channels, std::size_t out_channels, std::size_t groups);

    std::size_t in_per_group() const { return in_channels / groups; }
    std::size_t out_per_group() const { return out_channels / groups; }
    std::size_t parameter_count() const { return weights.size() + bias.size(); }
    void validate() const;
};

template <typename T>
struct ConvGrads {
    std::vector<T> weights;
    std::vector<T> bias;

    void reset(const ConvLayer<T>& layer) {
        weights.assign(layer.weights.size(), T{});
        bias.assign(layer.bias.size(), T{});
    }
};

/// input (N, in_channels, H, W) -> (N, out_channels, H, W).
template <typename T>
Tensor<T> conv3x3_forward(const Tensor<T>& input, const ConvLayer<T>& layer);

/// Single batch item: `in` holds in_channels planes of h*w, `out` receives
/// out_channels planes.
template <typename T>
void conv3x3_forward_item(const T* in, std::size_t h, std::size_t w, const ConvLayer<T>& layer,
                          T* out);

/// Adds the parameter gradients of one batch item into `grads` and, when
/// `grad_in` is non-null, writes the input gradient for that item.
template <typename T>
void conv3x3_backward_item(const T* in, const T* grad_out, std::size_t h, std::size_t w,
                           const ConvLayer<T>& layer, ConvGrads<T>& grads, T* grad_in);

/// Whole-batch backward. Parameter gradients are accumulated into `grads`
/// (in batch order); returns the input gradient, or an empty tensor when
/// `want_input_grad` is false.
template <typename T>
Tensor<T> conv3x3_backward(const Tensor<T>& input, const ConvLayer<T>& layer,
                           const Tensor<T>& grad_out, ConvGrads<T>& grads, bool want_input_grad);

}  // namespace percept::nn
