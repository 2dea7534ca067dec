#include "percept/nn/network.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#include "percept/nn/activation.hpp"

namespace percept::nn {

namespace {

std::uint64_t next_network_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter++;
}

template <typename U, typename T>
std::vector<U> cast_vector(const std::vector<T>& v) {
    return std::vector<U>(v.begin(), v.end());
}

}  // namespace

template <typename T>
Network<T>::Network() : id_(next_network_id()) {}

template <typename T>
Network<T>::Network(const Network& other)
    : blocks(other.blocks), final_sigmoid(other.final_sigmoid), id_(next_network_id()) {}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
    if (this != &other) {
        blocks = other.blocks;
        final_sigmoid = other.final_sigmoid;
        id_ = next_network_id();
    }
    return *this;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& input, Mode mode, Tape<T>* tape) {
    if (mode == Mode::infer) return infer(input);
    if (!tape) throw std::invalid_argument("network: train-mode forward requires a tape");
    if (blocks.empty()) throw std::logic_error("network: no blocks");

    tape->network_id = id_;
    tape->blocks.resize(blocks.size());
    Tensor<T> x = input;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        Block<T>& block = blocks[i];
        BlockTape<T>& bt = tape->blocks[i];
        Tensor<T> z = conv3x3_forward(x, block.conv);
        bt.input = std::move(x);
        bt.pre_pool_dims.assign(z.dims().begin(), z.dims().end());
        if (block.bn) {
            bt.stats = batchnorm_statistics(z, *block.bn);
            x = bn_relu_pool_forward(z, bt.stats, *block.bn, block.pool, bt.pool);
            bt.conv_out = std::move(z);
        } else {
            auto pooled = maxpool_forward(z, block.pool);
            bt.pool.argmax = std::move(pooled.argmax);
            bt.pool.winner.clear();
            bt.conv_out = Tensor<T>();
            x = std::move(pooled.output);
        }
    }
    if (final_sigmoid) x = activation_forward(x, Activation::sigmoid);
    tape->output = x;
    return x;
}

template <typename T>
Tensor<T> Network<T>::infer(const Tensor<T>& input) const {
    if (blocks.empty()) throw std::logic_error("network: no blocks");
    Tensor<T> x = input;
    PoolRecord<T> record;
    for (const Block<T>& block : blocks) {
        x = conv3x3_forward(x, block.conv);
        if (block.bn) {
            const BatchNormLayer<T>& bn = *block.bn;
            BatchNormStats<T> running{bn.running_mean, std::vector<T>(bn.channels())};
            for (std::size_t c = 0; c < bn.channels(); ++c)
                running.inv_std[c] =
                    static_cast<T>(1.0 / std::sqrt(double(bn.running_var[c]) + bn.epsilon));
            x = bn_relu_pool_forward(x, running, bn, block.pool, record);
        } else {
            x = maxpool_forward(x, block.pool).output;
        }
    }
    if (final_sigmoid) x = activation_forward(x, Activation::sigmoid);
    return x;
}

template <typename T>
Gradients<T> Network<T>::backward(const Tape<T>& tape, const Tensor<T>& grad_output) const {
    if (tape.network_id != id_ || tape.blocks.size() != blocks.size())
        throw std::logic_error("network backward: tape was not recorded by this network");
    require_same_shape(tape.output, grad_output, "network backward");

    Gradients<T> grads = zero_gradients(*this);
    Tensor<T> g = final_sigmoid ? activation_backward(tape.output, grad_output, Activation::sigmoid)
                                : grad_output;
    for (std::size_t i = blocks.size(); i-- > 0;) {
        const Block<T>& block = blocks[i];
        const BlockTape<T>& bt = tape.blocks[i];
        if (block.bn)
            g = bn_relu_pool_backward(bt.conv_out, bt.stats, *block.bn, bt.pool, g, grads.bn[i]);
        else
            g = maxpool_backward(g, bt.pool.argmax, bt.pre_pool_dims);
        g = conv3x3_backward(bt.input, block.conv, g, grads.conv[i], /*want_input_grad=*/i > 0);
    }
    return grads;
}

template <typename T>
std::vector<std::span<T>> Network<T>::parameters() {
    std::vector<std::span<T>> params;
    for (Block<T>& b : blocks) {
        params.emplace_back(b.conv.weights.data());
        params.emplace_back(b.conv.bias);
        if (b.bn) {
            params.emplace_back(b.bn->gamma);
            params.emplace_back(b.bn->beta);
        }
    }
    return params;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
    std::size_t n = 0;
    for (const Block<T>& b : blocks) {
        n += b.conv.parameter_count();
        if (b.bn) n += 2 * b.bn->channels();
    }
    return n;
}

template <typename T>
std::size_t Network<T>::total_pool() const {
    std::size_t p = 1;
    for (const Block<T>& b : blocks) p *= b.pool;
    return p;
}

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const {
    Network<U> out;
    out.final_sigmoid = final_sigmoid;
    for (const Block<T>& b : blocks) {
        Block<U> nb;
        nb.conv.in_channels = b.conv.in_channels;
        nb.conv.out_channels = b.conv.out_channels;
        nb.conv.groups = b.conv.groups;
        nb.conv.weights = b.conv.weights.template cast<U>();
        nb.conv.bias = cast_vector<U>(b.conv.bias);
        if (b.bn) {
            BatchNormLayer<U> bn;
            bn.gamma = cast_vector<U>(b.bn->gamma);
            bn.beta = cast_vector<U>(b.bn->beta);
            bn.running_mean = cast_vector<U>(b.bn->running_mean);
            bn.running_var = cast_vector<U>(b.bn->running_var);
            bn.epsilon = b.bn->epsilon;
            bn.momentum = b.bn->momentum;
            nb.bn = std::move(bn);
        }
        nb.pool = b.pool;
        out.blocks.push_back(std::move(nb));
    }
    return out;
}

template <typename T>
std::vector<std::span<const T>> gradient_spans(const Gradients<T>& grads) {
    std::vector<std::span<const T>> spans;
    for (std::size_t i = 0; i < grads.conv.size(); ++i) {
        spans.emplace_back(grads.conv[i].weights);
        spans.emplace_back(grads.conv[i].bias);
        if (!grads.bn[i].gamma.empty()) {
            spans.emplace_back(grads.bn[i].gamma);
            spans.emplace_back(grads.bn[i].beta);
        }
    }
    return spans;
}

template <typename T>
Gradients<T> zero_gradients(const Network<T>& net) {
    Gradients<T> g;
    g.conv.resize(net.blocks.size());
    g.bn.resize(net.blocks.size());
    for (std::size_t i = 0; i < net.blocks.size(); ++i) {
        g.conv[i].reset(net.blocks[i].conv);
        if (net.blocks[i].bn) g.bn[i].reset(*net.blocks[i].bn);
    }
    return g;
}

template class Network<float>;
template class Network<double>;
template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;
template Network<float> Network<float>::cast<float>() const;
template Network<double> Network<double>::cast<double>() const;
template std::vector<std::span<const float>> gradient_spans(const Gradients<float>&);
template std::vector<std::span<const double>> gradient_spans(const Gradients<double>&);
template Gradients<float> zero_gradients(const Network<float>&);
template Gradients<double> zero_gradients(const Network<double>&);

}  // namespace percept::nn
