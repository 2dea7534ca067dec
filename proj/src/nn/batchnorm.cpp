#include "percept/nn/batchnorm.hpp"

#include <experimental/simd>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "percept/core/parallel.hpp"

namespace percept::nn {

namespace stdx = std::experimental;

namespace {

template <typename T>
void check_input(const Tensor<T>& input, const BatchNormLayer<T>& layer) {
    if (input.rank() != 4) throw std::invalid_argument("batchnorm: input must be rank 4");
    if (input.channels() != layer.channels())
        throw std::invalid_argument("batchnorm: input has " + std::to_string(input.channels()) +
                                    " channels, layer has " + std::to_string(layer.channels()));
}

/// Sum of p[0..n) with SIMD partial sums flushed to double every block.
template <typename T, typename Fn>
double blocked_sum(const T* p, std::size_t n, Fn term) {
    using V = stdx::native_simd<T>;
    constexpr std::size_t L = V::size();
    constexpr std::size_t kBlock = 64 * L;
    double total = 0.0;
    std::size_t i = 0;
    for (; i + kBlock <= n; i += kBlock) {
        V acc[4] = {V(T{}), V(T{}), V(T{}), V(T{})};
        for (std::size_t j = 0; j < kBlock; j += 4 * L)
            for (int k = 0; k < 4; ++k) acc[k] += term(V(p + i + j + k * L, stdx::element_aligned));
        total += static_cast<double>(stdx::reduce((acc[0] + acc[1]) + (acc[2] + acc[3])));
    }
    for (; i < n; ++i) {
        const V v(p[i]);
        total += static_cast<double>(term(v)[0]);
    }
    return total;
}

}  // namespace

void ChannelMoments::merge(const ChannelMoments& other) {
    for (std::size_t c = 0; c < count.size(); ++c) {
        const double na = count[c], nb = other.count[c];
        if (nb == 0.0) continue;
        const double n = na + nb;
        const double delta = other.mean[c] - mean[c];
        mean[c] += delta * nb / n;
        m2[c] += other.m2[c] + delta * delta * na * nb / n;
        count[c] = n;
    }
}

template <typename T>
ChannelMoments item_moments(const T* item, std::size_t channels, std::size_t plane) {
    using V = stdx::native_simd<T>;
    ChannelMoments m;
    m.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        const T* p = item + c * plane;
        const double mean = blocked_sum(p, plane, [](V v) { return v; }) / double(plane);
        const V mv(static_cast<T>(mean));
        const double m2 = blocked_sum(p, plane, [&](V v) {
            const V d = v - mv;
            return d * d;
        });
        // Correct for centering on the rounded mean.
        const double shift = mean - static_cast<double>(static_cast<T>(mean));
        m.count[c] = double(plane);
        m.mean[c] = mean;
        m.m2[c] = std::max(0.0, m2 - double(plane) * shift * shift);
    }
    return m;
}

template <typename T>
BatchNormLayer<T> BatchNormLayer<T>::make(std::size_t channels) {
    if (channels == 0) throw std::invalid_argument("batchnorm: channels must be positive");
    BatchNormLayer layer;
    layer.gamma.assign(channels, T{1});
    layer.beta.assign(channels, T{0});
    layer.running_mean.assign(channels, T{0});
    layer.running_var.assign(channels, T{1});
    return layer;
}

template <typename T>
void BatchNormLayer<T>::validate() const {
    const std::size_t c = gamma.size();
    if (c == 0 || beta.size() != c || running_mean.size() != c || running_var.size() != c)
        throw std::invalid_argument("batchnorm: parameter vectors must share one length");
    if (!(epsilon > 0.0)) throw std::invalid_argument("batchnorm: epsilon must be positive");
    if (!(momentum > 0.0 && momentum < 1.0))
        throw std::invalid_argument("batchnorm: momentum must lie in (0, 1)");
    for (T v : running_var)
        if (v < T{0}) throw std::invalid_argument("batchnorm: negative running variance");
}

template <typename T>
BatchNormStats<T> batchnorm_statistics(const Tensor<T>& input, BatchNormLayer<T>& layer) {
    layer.validate();
    if (input.rank() != 4 || input.channels() != layer.channels())
        throw std::invalid_argument("batchnorm: input " + input.shape_string() +
                                    " does not match a layer of " +
                                    std::to_string(layer.channels()) + " channels");
    const std::size_t n = input.batch(), channels = input.channels(), plane = input.plane_size();
    if (n * plane < 2)
        throw std::invalid_argument(
            "batchnorm: train mode needs at least 2 values per channel (batch*H*W >= 2)");

    std::vector<ChannelMoments> per_item(n);
    parallel_for(n, [&](std::size_t b) {
        per_item[b] = item_moments(input.item(b).data(), channels, plane);
    });
    ChannelMoments total = per_item[0];
    for (std::size_t b = 1; b < n; ++b) total.merge(per_item[b]);

    BatchNormStats<T> st;
    st.mean.resize(channels);
    st.inv_std.resize(channels);
    const double mom = layer.momentum;
    for (std::size_t c = 0; c < channels; ++c) {
        const double var = total.m2[c] / total.count[c];
        st.mean[c] = static_cast<T>(total.mean[c]);
        st.inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + layer.epsilon));
        const double unbiased = total.m2[c] / (total.count[c] - 1.0);
        layer.running_mean[c] =
            static_cast<T>((1.0 - mom) * double(layer.running_mean[c]) + mom * total.mean[c]);
        layer.running_var[c] =
            static_cast<T>((1.0 - mom) * double(layer.running_var[c]) + mom * unbiased);
    }
    return st;
}

template <typename T>
Tensor<T> batchnorm_infer(const Tensor<T>& input, const BatchNormLayer<T>& layer) {
    layer.validate();
    check_input(input, layer);
    const std::size_t n = input.batch(), channels = input.channels(), plane = input.plane_size();
    Tensor<T> out(input.dims());
    parallel_for(n, [&](std::size_t b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const T scale = static_cast<T>(
                static_cast<double>(layer.gamma[c]) /
                std::sqrt(static_cast<double>(layer.running_var[c]) + layer.epsilon));
            const T shift = layer.beta[c] - scale * layer.running_mean[c];
            const T* src = input.plane(b, c).data();
            T* dst = out.plane(b, c).data();
            for (std::size_t i = 0; i < plane; ++i) dst[i] = scale * src[i] + shift;
        }
    });
    return out;
}

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, BatchNormLayer<T>& layer, Mode mode,
                            BatchNormCache<T>* cache) {
    if (mode == Mode::infer) return batchnorm_infer(input, layer);

    const std::size_t n = input.batch(), channels = input.channels(), plane = input.plane_size();
    BatchNormStats<T> st = batchnorm_statistics(input, layer);
    BatchNormCache<T> local;
    BatchNormCache<T>& cc = cache ? *cache : local;
    cc.mean = std::move(st.mean);
    cc.inv_std = std::move(st.inv_std);

    cc.normalized = Tensor<T>(input.dims());
    Tensor<T> out(input.dims());
    parallel_for(n, [&](std::size_t b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const T mean = cc.mean[c], inv_std = cc.inv_std[c];
            const T g = layer.gamma[c], be = layer.beta[c];
            const T* src = input.plane(b, c).data();
            T* xh = cc.normalized.plane(b, c).data();
            T* dst = out.plane(b, c).data();
            for (std::size_t i = 0; i < plane; ++i) {
                xh[i] = (src[i] - mean) * inv_std;
                dst[i] = g * xh[i] + be;
            }
        }
    });
    return out;
}

template <typename T>
Tensor<T> batchnorm_backward(const BatchNormCache<T>& cache, const BatchNormLayer<T>& layer,
                             const Tensor<T>& grad_out, BatchNormGrads<T>& grads) {
    require_same_shape(cache.normalized, grad_out, "batchnorm backward");
    const std::size_t n = grad_out.batch(), channels = grad_out.channels(),
                      plane = grad_out.plane_size();
    if (channels != layer.channels() || cache.mean.size() != channels)
        throw std::invalid_argument("batchnorm backward: cache does not match layer");
    if (grads.gamma.empty()) grads.reset(layer);

    // Per-item partial sums of dy and dy * x_hat, merged in batch order.
    std::vector<std::vector<double>> sum_dy(n, std::vector<double>(channels));
    std::vector<std::vector<double>> sum_dyx(n, std::vector<double>(channels));
    parallel_for(n, [&](std::size_t b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const T* dy = grad_out.plane(b, c).data();
            const T* xh = cache.normalized.plane(b, c).data();
            double s = 0.0, sx = 0.0;
            for (std::size_t i = 0; i < plane; ++i) {
                s += static_cast<double>(dy[i]);
                sx += static_cast<double>(dy[i]) * static_cast<double>(xh[i]);
            }
            sum_dy[b][c] = s;
            sum_dyx[b][c] = sx;
        }
    });

    const double count = static_cast<double>(n * plane);
    std::vector<T> mean_dy(channels), mean_dyx(channels), scale(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        double s = 0.0, sx = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            s += sum_dy[b][c];
            sx += sum_dyx[b][c];
        }
        grads.beta[c] += static_cast<T>(s);
        grads.gamma[c] += static_cast<T>(sx);
        mean_dy[c] = static_cast<T>(s / count);
        mean_dyx[c] = static_cast<T>(sx / count);
        scale[c] = layer.gamma[c] * cache.inv_std[c];
    }

    Tensor<T> grad_in(grad_out.dims());
    parallel_for(n, [&](std::size_t b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const T* dy = grad_out.plane(b, c).data();
            const T* xh = cache.normalized.plane(b, c).data();
            T* dx = grad_in.plane(b, c).data();
            for (std::size_t i = 0; i < plane; ++i)
                dx[i] = scale[c] * (dy[i] - mean_dy[c] - xh[i] * mean_dyx[c]);
        }
    });
    return grad_in;
}

#define PERCEPT_INSTANTIATE_BN(T)                                                             \
    template struct BatchNormLayer<T>;                                                        \
    template ChannelMoments item_moments(const T*, std::size_t, std::size_t);                 \
    template BatchNormStats<T> batchnorm_statistics(const Tensor<T>&, BatchNormLayer<T>&);    \
    template Tensor<T> batchnorm_forward(const Tensor<T>&, BatchNormLayer<T>&, Mode,          \
                                         BatchNormCache<T>*);                                 \
    template Tensor<T> batchnorm_infer(const Tensor<T>&, const BatchNormLayer<T>&);           \
    template Tensor<T> batchnorm_backward(const BatchNormCache<T>&, const BatchNormLayer<T>&, \
                                          const Tensor<T>&, BatchNormGrads<T>&);

PERCEPT_INSTANTIATE_BN(float)
PERCEPT_INSTANTIATE_BN(double)

}  // namespace percept::nn
