#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "percept/net/model.hpp"
#include "percept/nn/rmsprop.hpp"
#include "percept/transforms/transform.hpp"

namespace percept::net {

/// One record: input (C, H, W) and raw per-tile targets (R, H/w, W/w).
struct TrainSample {
    TensorF input;
    TensorF target;
};

struct HoldoutSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> holdout;
};

/// 64 held-out samples when count >= 640, else 10% (at least one when
/// count >= 2). Both lists are sorted.
HoldoutSplit split_holdout(std::size_t count, std::uint64_t seed);

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double holdout_loss = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> mu;
};

struct TrainOptions {
    std::size_t epochs = 200;
    std::size_t batch_size = 16;
    std::uint64_t seed = 1;
    nn::OptimizerState optimizer;  // learning rate, decay, rho, epsilon
    std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
    std::vector<EpochStats> history;
    transforms::TransformSpec transform;  // final mu
    nn::OptimizerState optimizer;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mini-batch RMSProp on the adaptive loss. Precomputed mu is the mean of
/// the training targets; running mu starts at the first batch mean and then
/// follows update_mu. Deterministic for a fixed seed.
TrainResult train(NetworkModel& model, std::span<const TrainSample> samples,
                  std::span<const std::size_t> train_ids, std::span<const std::size_t> holdout_ids,
                  transforms::TransformSpec transform, const TrainOptions& options);

/// Stacks samples[ids] into (N, C, H, W) inputs and targets.
void assemble_batch(std::span<const TrainSample> samples, std::span<const std::size_t> ids,
                    TensorF& inputs, TensorF& targets);

/// Mean adaptive loss of the model (infer mode) over samples[ids].
double evaluate_loss(const NetworkModel& model, std::span<const TrainSample> samples,
                     std::span<const std::size_t> ids, const transforms::TransformSpec& transform,
                     std::size_t batch_size = 16);

}  // namespace percept::net
