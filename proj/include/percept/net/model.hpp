#pragma once

#include <cstdint>
#include <vector>

#include "percept/net/config.hpp"
#include "percept/nn/network.hpp"
#include "percept/transforms/transform.hpp"

namespace percept::net {

using nn::TensorF;

struct NetworkModel {
    NetworkConfig config;
    nn::Network<float> net;
};

/// conv -> BN -> ReLU -> pool for layers 1-4, conv -> pool for layer 5,
/// then a sigmoid. Conv weights ~ N(0, 2 / (fan_in * 9)) with fan_in the
/// input channels per group; biases 0, gamma 1, beta 0.
NetworkModel build_network(const NetworkConfig& config, std::uint64_t seed);

/// Predictions in transformed space, shape (N, out, H/w, W/w).
TensorF forward(const NetworkModel& model, const TensorF& inputs);

/// Train-mode forward that records `tape` and updates batch-norm statistics.
TensorF forward_train(NetworkModel& model, const TensorF& inputs, nn::Tape<float>& tape);

struct LossResult {
    double loss = 0.0;
    TensorF grad;  // d loss / d prediction
};

/// Mean |T(Y) - Yhat| with Y raw and Yhat transformed; gradient
/// -sign(T(Y) - Yhat) / n, zero where they are equal.
LossResult adaptive_loss(const TensorF& raw_targets, const TensorF& predictions,
                         const transforms::TransformSpec& transform);

/// Same loss against targets that are already transformed.
LossResult mae_loss(const TensorF& transformed_targets, const TensorF& predictions);

struct TilePredictions {
    TensorF transformed;  // (N, out, H/w, W/w)
    TensorF raw;          // inverse transform of `transformed`
};

TilePredictions predict_tiles(const NetworkModel& model, const TensorF& inputs,
                              const transforms::TransformSpec& transform);

}  // namespace percept::net
