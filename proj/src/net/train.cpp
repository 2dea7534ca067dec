#include "percept/net/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "percept/core/random.hpp"

namespace percept::net {

namespace {

void check_sample(const TrainSample& s, const TrainSample& first, std::size_t id) {
    if (s.input.rank() != 3 || s.target.rank() != 3)
        throw std::invalid_argument("train: sample " + std::to_string(id) +
                                    " must hold (C, H, W) input and target tensors");
    if (!s.input.same_shape(first.input) || !s.target.same_shape(first.target))
        throw std::invalid_argument("train: sample " + std::to_string(id) +
                                    " differs in shape from sample 0");
}

template <typename Tensor3>
void stack(const std::vector<const Tensor3*>& items, TensorF& out) {
    const auto& d = items.front()->dims();
    if (out.rank() != 4 || out.batch() != items.size() || out.channels() != d[0] ||
        out.height() != d[1] || out.width() != d[2])
        out = TensorF({items.size(), d[0], d[1], d[2]});
    for (std::size_t i = 0; i < items.size(); ++i)
        std::memcpy(out.item(i).data(), items[i]->raw(), items[i]->size() * sizeof(float));
}

}  // namespace

HoldoutSplit split_holdout(std::size_t count, std::uint64_t seed) {
    std::size_t held = count >= 640 ? 64 : count >= 2 ? std::max<std::size_t>(1, count / 10) : 0;
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0x401du));
    rng.shuffle(std::span<std::size_t>(order));
    HoldoutSplit split;
    split.holdout.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
    split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
    std::sort(split.holdout.begin(), split.holdout.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

void assemble_batch(std::span<const TrainSample> samples, std::span<const std::size_t> ids,
                    TensorF& inputs, TensorF& targets) {
    if (ids.empty()) throw std::invalid_argument("assemble_batch: no samples");
    std::vector<const TensorF*> in, tg;
    for (std::size_t id : ids) {
        const TrainSample& s = samples[id];
        check_sample(s, samples[ids.front()], id);
        in.push_back(&s.input);
        tg.push_back(&s.target);
    }
    stack(in, inputs);
    stack(tg, targets);
}

double evaluate_loss(const NetworkModel& model, std::span<const TrainSample> samples,
                     std::span<const std::size_t> ids, const transforms::TransformSpec& transform,
                     std::size_t batch_size) {
    if (ids.empty()) return std::numeric_limits<double>::quiet_NaN();
    double weighted = 0.0, count = 0.0;
    TensorF inputs, targets;
    for (std::size_t start = 0; start < ids.size(); start += batch_size) {
        const auto chunk = ids.subspan(start, std::min(batch_size, ids.size() - start));
        assemble_batch(samples, chunk, inputs, targets);
        const auto loss = adaptive_loss(targets, forward(model, inputs), transform);
        weighted += loss.loss * double(targets.size());
        count += double(targets.size());
    }
    return weighted / count;
}

TrainResult train(NetworkModel& model, std::span<const TrainSample> samples,
                  std::span<const std::size_t> train_ids, std::span<const std::size_t> holdout_ids,
                  transforms::TransformSpec transform, const TrainOptions& options) {
    if (samples.empty() || train_ids.empty()) throw std::invalid_argument("train: empty dataset");
    if (options.batch_size == 0) throw std::invalid_argument("train: batch size must be positive");
    for (std::size_t id : train_ids)
        if (id >= samples.size()) throw std::invalid_argument("train: sample id out of range");
    {
        std::vector<std::size_t> a(train_ids.begin(), train_ids.end());
        std::vector<std::size_t> b(holdout_ids.begin(), holdout_ids.end());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        std::vector<std::size_t> both;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
        if (!both.empty())
            throw std::invalid_argument("train: holdout overlaps the training set (sample " +
                                        std::to_string(both.front()) + ")");
    }
    const std::size_t out_channels = model.config.out_channels;
    if (transform.per_channel && transform.mu.size() != out_channels)
        transform.mu.assign(out_channels, transform.mu.empty() ? 0.5 : transform.mu.front());

    if (transform.mu_mode == transforms::MuMode::precomputed && transform.kind != transforms::Kind::identity) {
        std::vector<const TensorF*> targets;
        for (std::size_t id : train_ids) targets.push_back(&samples[id].target);
        transform.mu = transforms::dataset_mu(targets, transform.per_channel);
    }
    transform.validate();

    TrainResult result;
    nn::OptimizerState opt = options.optimizer;
    opt.validate();
    std::vector<std::size_t> order(train_ids.begin(), train_ids.end());
    bool mu_initialized = transform.mu_mode != transforms::MuMode::running;
    TensorF inputs, targets;
    nn::Tape<float> tape;

    for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
        Rng rng(derive_seed(options.seed, epoch));
        rng.shuffle(std::span<std::size_t>(order));
        double weighted = 0.0, count = 0.0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::span<const std::size_t> ids(order.data() + start,
                                                   std::min(options.batch_size, order.size() - start));
            assemble_batch(samples, ids, inputs, targets);
            if (transform.mu_mode == transforms::MuMode::running) {
                if (!mu_initialized) {
                    transform.mu = transforms::dataset_mu({&targets}, transform.per_channel);
                    mu_initialized = true;
                } else {
                    transforms::update_mu(transform, targets);
                }
            }
            const TensorF pred = forward_train(model, inputs, tape);
            const LossResult loss = adaptive_loss(targets, pred, transform);
            if (!std::isfinite(loss.loss))
                throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch starting at position " + std::to_string(start) +
                                    " (first sample id " + std::to_string(ids.front()) + ")");
            const nn::Gradients<float> grads = model.net.backward(tape, loss.grad);
            const auto params = model.net.parameters();
            const auto grad_spans = nn::gradient_spans(grads);
            nn::rmsprop_step(std::span<const std::span<float>>(params),
                             std::span<const std::span<const float>>(grad_spans), opt);
            weighted += loss.loss * double(targets.size());
            count += double(targets.size());
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = weighted / count;
        stats.holdout_loss = evaluate_loss(model, samples, holdout_ids, transform, options.batch_size);
        stats.mu = transform.mu;
        if (!std::isfinite(stats.train_loss))
            throw TrainingError("train: non-finite epoch loss at epoch " + std::to_string(epoch));
        if (options.on_epoch) options.on_epoch(stats);
        result.history.push_back(std::move(stats));
    }
    result.transform = transform;
    result.optimizer = opt;
    return result;
}

}  // namespace percept::net
