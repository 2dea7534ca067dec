#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "percept/nn/batchnorm.hpp"
#include "percept/nn/tensor.hpp"

namespace percept::nn {

/// Window winners of a fused block: flat index into z and the raw z value.
template <typename T>
struct PoolRecord {
    std::vector<std::uint32_t> argmax;
    std::vector<T> winner;
};

/// maxpool(relu(batchnorm(z))) in one pass over z. The affine map is
/// monotone per channel, so each window's winner is the max (or, for a
/// negative scale, the min) of z; ties keep the first scanline position.
template <typename T>
Tensor<T> bn_relu_pool_forward(const Tensor<T>& z, const BatchNormStats<T>& stats,
                               const BatchNormLayer<T>& layer, std::size_t pool,
                               PoolRecord<T>& record);

/// Gradient wrt z of the fused block given the gradient of its pooled
/// output; accumulates gamma and beta gradients.
template <typename T>
Tensor<T> bn_relu_pool_backward(const Tensor<T>& z, const BatchNormStats<T>& stats,
                                const BatchNormLayer<T>& layer, const PoolRecord<T>& record,
                                const Tensor<T>& grad_out, BatchNormGrads<T>& grads);

}  // namespace percept::nn
