#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "percept/nn/tensor.hpp"

namespace percept::nn {

/// Output of a max-pool forward pass. `argmax[i]` is the flat input index
/// that produced output element i (first maximum in scanline order).
template <typename T>
struct MaxPoolResult {
    Tensor<T> output;
    std::vector<std::uint32_t> argmax;
};

/// factor x factor blocks -> block maximum. Factor 1 copies the input.
template <typename T>
MaxPoolResult<T> maxpool_forward(const Tensor<T>& input, std::size_t factor);

/// Routes each output gradient to the input position recorded in argmax.
template <typename T>
Tensor<T> maxpool_backward(const Tensor<T>& grad_out, const std::vector<std::uint32_t>& argmax,
                           std::span<const std::size_t> input_dims);

}  // namespace percept::nn
