#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "percept/nn/batchnorm.hpp"
#include "percept/nn/conv.hpp"
#include "percept/nn/fused.hpp"
#include "percept/nn/maxpool.hpp"
#include "percept/nn/tensor.hpp"

namespace percept::nn {

/// conv -> [batch norm -> ReLU] -> max pool. The network applies one
/// sigmoid after its last block when `final_sigmoid` is set.
template <typename T>
struct Block {
    ConvLayer<T> conv;
    std::optional<BatchNormLayer<T>> bn;
    std::size_t pool = 1;
};

template <typename T>
struct BlockTape {
    Tensor<T> input;
    Tensor<T> conv_out;         // kept only for blocks with batch norm
    BatchNormStats<T> stats;
    PoolRecord<T> pool;  // argmax only for blocks without batch norm
    std::vector<std::size_t> pre_pool_dims;
};

/// Activations recorded by a train-mode forward pass.
template <typename T>
struct Tape {
    std::uint64_t network_id = 0;
    std::vector<BlockTape<T>> blocks;
    Tensor<T> output;
};

template <typename T>
struct Gradients {
    std::vector<ConvGrads<T>> conv;
    std::vector<BatchNormGrads<T>> bn;  // empty entries for blocks without batch norm
};

template <typename T>
class Network {
public:
    Network();
    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;

    std::vector<Block<T>> blocks;
    bool final_sigmoid = true;

    /// Train mode records a tape (required) and updates batch-norm running
    /// statistics; infer mode leaves the network untouched.
    Tensor<T> forward(const Tensor<T>& input, Mode mode, Tape<T>* tape);
    Tensor<T> infer(const Tensor<T>& input) const;

    /// Gradients of a scalar loss whose gradient wrt the network output is
    /// `grad_output`. The tape must come from this network's last forward.
    Gradients<T> backward(const Tape<T>& tape, const Tensor<T>& grad_output) const;

    /// Trainable parameters in a fixed order: per block conv weights, conv
    /// bias, then gamma and beta when batch norm is present.
    std::vector<std::span<T>> parameters();
    std::size_t parameter_count() const;
    std::size_t total_pool() const;

    std::uint64_t id() const { return id_; }

    template <typename U>
    Network<U> cast() const;

private:
    std::uint64_t id_;
};

/// Gradient spans aligned with Network::parameters().
template <typename T>
std::vector<std::span<const T>> gradient_spans(const Gradients<T>& grads);

/// Zero-filled gradients shaped for `net`.
template <typename T>
Gradients<T> zero_gradients(const Network<T>& net);

}  // namespace percept::nn
