#pragma once

#include <cstddef>
#include <vector>

#include "percept/nn/tensor.hpp"

namespace percept::nn {

enum class Mode { train, infer };

template <typename T>
struct BatchNormLayer {
    std::vector<T> gamma, beta;
    std::vector<T> running_mean, running_var;
    double epsilon = 1e-5;
    double momentum = 0.1;

    /// gamma 1, beta 0, running mean 0, running variance 1.
    static BatchNormLayer make(std::size_t channels);

    std::size_t channels() const { return gamma.size(); }
    void validate() const;
};

template <typename T>
struct BatchNormGrads {
    std::vector<T> gamma, beta;

    void reset(const BatchNormLayer<T>& layer) {
        gamma.assign(layer.channels(), T{});
        beta.assign(layer.channels(), T{});
    }
};

/// Per-channel statistics of a training forward pass, kept for backward.
template <typename T>
struct BatchNormCache {
    std::vector<T> mean;
    std::vector<T> inv_std;
    Tensor<T> normalized;  // x_hat, same shape as the input
};

/// Per-channel count/mean/M2 of one batch item; merged in batch order so the
/// result is independent of how items were distributed across workers.
struct ChannelMoments {
    std::vector<double> count, mean, m2;

    void resize(std::size_t channels) {
        count.assign(channels, 0.0);
        mean.assign(channels, 0.0);
        m2.assign(channels, 0.0);
    }
    void merge(const ChannelMoments& other);
};

template <typename T>
ChannelMoments item_moments(const T* item, std::size_t channels, std::size_t plane);

/// Train-mode batch statistics of one batch-norm layer.
template <typename T>
struct BatchNormStats {
    std::vector<T> mean;
    std::vector<T> inv_std;
};

/// Batch mean and 1/sqrt(var + eps) per channel (biased variance); blends
/// mean and unbiased variance into the running statistics.
template <typename T>
BatchNormStats<T> batchnorm_statistics(const Tensor<T>& input, BatchNormLayer<T>& layer);

/// Train mode normalizes with batch statistics (biased variance) and blends
/// them into the running statistics (unbiased variance); infer mode reads
/// only the running statistics. `cache` may be null in infer mode.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, BatchNormLayer<T>& layer, Mode mode,
                            BatchNormCache<T>* cache);

/// Infer-mode forward that leaves the layer untouched.
template <typename T>
Tensor<T> batchnorm_infer(const Tensor<T>& input, const BatchNormLayer<T>& layer);

/// Gradient through a train-mode forward; accumulates gamma/beta gradients.
template <typename T>
Tensor<T> batchnorm_backward(const BatchNormCache<T>& cache, const BatchNormLayer<T>& layer,
                             const Tensor<T>& grad_out, BatchNormGrads<T>& grads);

}  // namespace percept::nn
