#include "percept/net/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "percept/core/random.hpp"

namespace percept::net {

namespace {

void check_inputs(const NetworkModel& model, const TensorF& inputs) {
    if (inputs.rank() != 4) throw std::invalid_argument("network: inputs must be (N, C, H, W)");
    if (inputs.channels() != model.config.in_channels)
        throw std::invalid_argument("network: input has " + std::to_string(inputs.channels()) +
                                    " channels, model expects " +
                                    std::to_string(model.config.in_channels));
    const std::size_t w = model.config.tile_size;
    if (inputs.height() % w != 0 || inputs.width() % w != 0)
        throw std::invalid_argument("network: input " + inputs.shape_string() +
                                    " is not divisible by tile size " + std::to_string(w));
}

}  // namespace

NetworkModel build_network(const NetworkConfig& config, std::uint64_t seed) {
    config.validate();
    NetworkModel model;
    model.config = config;
    Rng rng(seed);
    for (std::size_t i = 0; i < kLayers; ++i) {
        nn::Block<float> block;
        block.conv = nn::ConvLayer<float>::make(config.layer_in(i), config.layer_out(i),
                                                config.groups[i]);
        const double fan_in = double(block.conv.in_per_group());
        const double stddev = std::sqrt(2.0 / (fan_in * 9.0));
        for (float& w : block.conv.weights.data()) w = static_cast<float>(stddev * rng.normal());
        if (i + 1 < kLayers) block.bn = nn::BatchNormLayer<float>::make(config.layer_out(i));
        block.pool = config.pooling[i];
        model.net.blocks.push_back(std::move(block));
    }
    model.net.final_sigmoid = true;
    return model;
}

TensorF forward(const NetworkModel& model, const TensorF& inputs) {
    check_inputs(model, inputs);
    return model.net.infer(inputs);
}

TensorF forward_train(NetworkModel& model, const TensorF& inputs, nn::Tape<float>& tape) {
    check_inputs(model, inputs);
    return model.net.forward(inputs, nn::Mode::train, &tape);
}

LossResult mae_loss(const TensorF& transformed_targets, const TensorF& predictions) {
    nn::require_same_shape(transformed_targets, predictions, "loss");
    if (predictions.size() == 0) throw std::invalid_argument("loss: empty batch");
    LossResult r;
    r.grad = TensorF(predictions.dims());
    const double n = double(predictions.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = double(transformed_targets[i]) - double(predictions[i]);
        sum += std::abs(d);
        r.grad[i] = d > 0.0 ? static_cast<float>(-1.0 / n) : d < 0.0 ? static_cast<float>(1.0 / n) : 0.0f;
    }
    r.loss = sum / n;
    return r;
}

LossResult adaptive_loss(const TensorF& raw_targets, const TensorF& predictions,
                         const transforms::TransformSpec& transform) {
    nn::require_same_shape(raw_targets, predictions, "adaptive loss");
    return mae_loss(transforms::apply(transform, raw_targets), predictions);
}

TilePredictions predict_tiles(const NetworkModel& model, const TensorF& inputs,
                              const transforms::TransformSpec& transform) {
    TilePredictions p;
    p.transformed = forward(model, inputs);
    p.raw = transforms::invert(transform, p.transformed);
    return p;
}

}  // namespace percept::net
