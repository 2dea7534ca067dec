#include "percept/nn/fused.hpp"

#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "percept/core/parallel.hpp"

#if defined(__GNUC__) && !defined(__clang__)
#define PERCEPT_VECTOR_POOL 1
#endif

namespace percept::nn {

namespace {

template <typename T>
struct Affine {
    T scale, shift;  // relu input = scale * z + shift
};

template <typename T>
Affine<T> channel_affine(const BatchNormStats<T>& st, const BatchNormLayer<T>& layer, std::size_t c) {
    const T scale = layer.gamma[c] * st.inv_std[c];
    return {scale, layer.beta[c] - scale * st.mean[c]};
}

/// Generic window scan for one (item, channel) plane.
template <typename T>
void pool_plane_scalar(const T* src, std::size_t w, std::size_t pool, std::size_t oh,
                       std::size_t ow, Affine<T> af, std::size_t in_base, T* dst,
                       std::uint32_t* am, T* win, std::size_t ox_begin = 0) {
    const bool flip = af.scale < T{0};
    for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = ox_begin; ox < ow; ++ox) {
            std::size_t best = oy * pool * w + ox * pool;
            for (std::size_t dy = 0; dy < pool; ++dy)
                for (std::size_t dx = 0; dx < pool; ++dx) {
                    const std::size_t idx = (oy * pool + dy) * w + ox * pool + dx;
                    if (flip ? src[idx] < src[best] : src[idx] > src[best]) best = idx;
                }
            const T a = af.scale * src[best] + af.shift;
            dst[oy * ow + ox] = a > T{0} ? a : T{0};
            am[oy * ow + ox] = static_cast<std::uint32_t>(in_base + best);
            win[oy * ow + ox] = src[best];
        }
}

#ifdef PERCEPT_VECTOR_POOL
using vf = float __attribute__((vector_size(64)));
using vi = std::int32_t __attribute__((vector_size(64)));
constexpr std::size_t kLanes = 16;
constexpr vi kEven = {0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30};
constexpr vi kOdd = {1, 3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25, 27, 29, 31};
constexpr vi kInterleaveLo = {0, 16, 1, 17, 2, 18, 3, 19, 4, 20, 5, 21, 6, 22, 7, 23};
constexpr vi kInterleaveHi = {8, 24, 9, 25, 10, 26, 11, 27, 12, 28, 13, 29, 14, 30, 15, 31};
constexpr vi kTwiceIota = {0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30};

template <typename V, typename S>
V load(const S* p) {
    V v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

template <typename V, typename S>
void store(S* p, V v) {
    std::memcpy(p, &v, sizeof v);
}

/// 2x2 windows, 16 outputs per step; returns the first output column not
/// handled.
template <bool Flip>
std::size_t pool2_plane_vector(const float* src, std::size_t w, std::size_t oh, std::size_t ow,
                               Affine<float> af, std::size_t in_base, float* dst,
                               std::uint32_t* am, float* win) {
    const vf zero = vf{} * 0.0f;
    const vi wv = vi{} + static_cast<std::int32_t>(w);
    std::size_t ox = 0;
    for (std::size_t oy = 0; oy < oh; ++oy) {
        const float* r0 = src + 2 * oy * w;
        const float* r1 = r0 + w;
        const std::int32_t row_base = static_cast<std::int32_t>(in_base + 2 * oy * w);
        for (ox = 0; ox + kLanes <= ow; ox += kLanes) {
            const vf a0 = load<vf>(r0 + 2 * ox), a1 = load<vf>(r0 + 2 * ox + kLanes);
            const vf b0 = load<vf>(r1 + 2 * ox), b1 = load<vf>(r1 + 2 * ox + kLanes);
            const vf v1 = __builtin_shuffle(a0, a1, kOdd);
            const vf v2 = __builtin_shuffle(b0, b1, kEven);
            const vf v3 = __builtin_shuffle(b0, b1, kOdd);
            vf best = __builtin_shuffle(a0, a1, kEven);
            vi off = vi{} * 0;
            vi c = Flip ? v1 < best : v1 > best;
            best = c ? v1 : best;
            off = c ? off + 1 : off;
            c = Flip ? v2 < best : v2 > best;
            best = c ? v2 : best;
            off = c ? wv : off;
            c = Flip ? v3 < best : v3 > best;
            best = c ? v3 : best;
            off = c ? wv + 1 : off;
            const vf a = af.scale * best + af.shift;
            store(dst + oy * ow + ox, a > zero ? a : zero);
            store(win + oy * ow + ox, best);
            store(am + oy * ow + ox,
                  off + kTwiceIota + (row_base + static_cast<std::int32_t>(2 * ox)));
        }
    }
    return ox;
}
#endif

template <typename T>
void pool_plane(const T* src, std::size_t w, std::size_t pool, std::size_t oh, std::size_t ow,
                Affine<T> af, std::size_t in_base, T* dst, std::uint32_t* am, T* win,
                bool vector_ok) {
#ifdef PERCEPT_VECTOR_POOL
    if constexpr (std::is_same_v<T, float>) {
        if (vector_ok && pool == 2 && ow >= kLanes) {
            const std::size_t done =
                af.scale < 0.0f ? pool2_plane_vector<true>(src, w, oh, ow, af, in_base, dst, am, win)
                                : pool2_plane_vector<false>(src, w, oh, ow, af, in_base, dst, am, win);
            if (done < ow) pool_plane_scalar(src, w, pool, oh, ow, af, in_base, dst, am, win, done);
            return;
        }
    }
#endif
    (void)vector_ok;
    pool_plane_scalar(src, w, pool, oh, ow, af, in_base, dst, am, win);
}

}  // namespace

template <typename T>
Tensor<T> bn_relu_pool_forward(const Tensor<T>& z, const BatchNormStats<T>& stats,
                               const BatchNormLayer<T>& layer, std::size_t pool,
                               PoolRecord<T>& record) {
    if (z.rank() != 4 || z.channels() != layer.channels() || stats.mean.size() != layer.channels())
        throw std::invalid_argument("fused block: shapes do not match the batch-norm layer");
    const std::size_t n = z.batch(), channels = z.channels(), h = z.height(), w = z.width();
    if (pool == 0 || h % pool != 0 || w % pool != 0)
        throw std::invalid_argument("fused block: spatial dims not divisible by pool factor");
    if (z.size() > std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument("fused block: tensor too large for 32-bit argmax");
    const bool vector_ok = z.size() < (std::size_t{1} << 31);
    const std::size_t oh = h / pool, ow = w / pool;
    Tensor<T> out({n, channels, oh, ow}, uninitialized);
    record.argmax.resize(out.size());
    record.winner.resize(out.size());
    parallel_for(n, [&](std::size_t b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t in_base = (b * channels + c) * h * w;
            const std::size_t out_base = (b * channels + c) * oh * ow;
            pool_plane(z.raw() + in_base, w, pool, oh, ow, channel_affine(stats, layer, c), in_base,
                       out.raw() + out_base, record.argmax.data() + out_base,
                       record.winner.data() + out_base, vector_ok);
        }
    });
    return out;
}

template <typename T>
Tensor<T> bn_relu_pool_backward(const Tensor<T>& z, const BatchNormStats<T>& stats,
                                const BatchNormLayer<T>& layer, const PoolRecord<T>& record,
                                const Tensor<T>& grad_out, BatchNormGrads<T>& grads) {
    if (record.argmax.size() != grad_out.size() || record.winner.size() != grad_out.size() ||
        grad_out.rank() != 4 || grad_out.channels() != z.channels() || grad_out.batch() != z.batch())
        throw std::invalid_argument("fused block backward: gradient does not match the tape");
    const std::size_t n = z.batch(), channels = z.channels(), h = z.height(), w = z.width();
    const std::size_t plane = h * w, oh = grad_out.height(), ow = grad_out.width();
    const std::size_t oplane = oh * ow;
    if (grads.gamma.empty()) grads.reset(layer);

    // Only winners with a positive activation receive gradient; sum g and
    // g * x_hat over them.
    std::vector<double> s1(n * channels), s2(n * channels);
    parallel_for(n, [&](std::size_t b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const auto af = channel_affine(stats, layer, c);
            const std::size_t base = (b * channels + c) * oplane;
            const T* win = record.winner.data() + base;
            const T* g = grad_out.raw() + base;
            double a1 = 0.0, a2 = 0.0;
            std::size_t i = 0;
#ifdef PERCEPT_VECTOR_POOL
            if constexpr (std::is_same_v<T, float>) {
                const vf zero = vf{} * 0.0f;
                while (i + kLanes <= oplane) {
                    vf acc1 = zero, acc2 = zero;
                    // Flush to double every 64 vectors to bound float error.
                    for (std::size_t k = 0; k < 64 && i + kLanes <= oplane; ++k, i += kLanes) {
                        const vf wv = load<vf>(win + i);
                        const vf gv = load<vf>(g + i);
                        const vf ga = af.scale * wv + af.shift > zero ? gv : zero;
                        acc1 += ga;
                        acc2 += ga * ((wv - stats.mean[c]) * stats.inv_std[c]);
                    }
                    for (std::size_t l = 0; l < kLanes; ++l) {
                        a1 += acc1[l];
                        a2 += acc2[l];
                    }
                }
            }
#endif
            for (; i < oplane; ++i) {
                const double ga = af.scale * win[i] + af.shift > T{0} ? double(g[i]) : 0.0;
                a1 += ga;
                a2 += ga * double((win[i] - stats.mean[c]) * stats.inv_std[c]);
            }
            s1[b * channels + c] = a1;
            s2[b * channels + c] = a2;
        }
    });

    const double count = double(n * plane);
    std::vector<T> k(channels), m1(channels), m2(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        double t1 = 0.0, t2 = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            t1 += s1[b * channels + c];
            t2 += s2[b * channels + c];
        }
        grads.beta[c] += static_cast<T>(t1);
        grads.gamma[c] += static_cast<T>(t2);
        k[c] = layer.gamma[c] * stats.inv_std[c];
        m1[c] = static_cast<T>(t1 / count);
        m2[c] = static_cast<T>(t2 / count);
    }

    // dz = k (g_a - m1 - x_hat m2): an affine map of z everywhere, plus k g
    // at active winners.
    Tensor<T> dz(z.dims(), uninitialized);
    const bool vector_ok = z.size() < (std::size_t{1} << 31);
    parallel_for(n, [&](std::size_t b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const T bcoef = -k[c] * m2[c] * stats.inv_std[c];
            const T acoef = -k[c] * m1[c] - bcoef * stats.mean[c];
            const auto af = channel_affine(stats, layer, c);
            const std::size_t in_base = (b * channels + c) * plane;
            const std::size_t out_base = (b * channels + c) * oplane;
            const T* src = z.raw() + in_base;
            T* dst = dz.raw() + in_base;
            const T* g = grad_out.raw() + out_base;
            const T* win = record.winner.data() + out_base;
            const std::uint32_t* am = record.argmax.data() + out_base;
            const auto active_grad = [&](std::size_t o) {
                return af.scale * win[o] + af.shift > T{0} ? k[c] * g[o] : T{0};
            };
#ifdef PERCEPT_VECTOR_POOL
            if constexpr (std::is_same_v<T, float>) {
                if (vector_ok && h == 2 * oh && w == 2 * ow && ow % kLanes == 0) {
                    const vf zero = vf{} * 0.0f;
                    const vi wv = vi{} + static_cast<std::int32_t>(w);
                    for (std::size_t oy = 0; oy < oh; ++oy) {
                        const std::int32_t row_base = static_cast<std::int32_t>(in_base + 2 * oy * w);
                        for (std::size_t ox = 0; ox < ow; ox += kLanes) {
                            const std::size_t o = oy * ow + ox;
                            const vf wn = load<vf>(win + o);
                            const vf kg = af.scale * wn + af.shift > zero ? k[c] * load<vf>(g + o) : zero;
                            const vi off = load<vi>(am + o) - kTwiceIota -
                                           (row_base + static_cast<std::int32_t>(2 * ox));
                            const vf e0 = off == 0 ? kg : zero;
                            const vf o0 = off == 1 ? kg : zero;
                            const vf e1 = off == wv ? kg : zero;
                            const vf o1 = off == wv + 1 ? kg : zero;
                            const std::size_t p0 = 2 * oy * w + 2 * ox, p1 = p0 + w;
                            store(dst + p0, acoef + bcoef * load<vf>(src + p0) +
                                                __builtin_shuffle(e0, o0, kInterleaveLo));
                            store(dst + p0 + kLanes, acoef + bcoef * load<vf>(src + p0 + kLanes) +
                                                         __builtin_shuffle(e0, o0, kInterleaveHi));
                            store(dst + p1, acoef + bcoef * load<vf>(src + p1) +
                                                __builtin_shuffle(e1, o1, kInterleaveLo));
                            store(dst + p1 + kLanes, acoef + bcoef * load<vf>(src + p1 + kLanes) +
                                                         __builtin_shuffle(e1, o1, kInterleaveHi));
                        }
                    }
                    continue;
                }
            }
#endif
            (void)vector_ok;
            for (std::size_t i = 0; i < plane; ++i) dst[i] = acoef + bcoef * src[i];
            for (std::size_t o = 0; o < oplane; ++o) dz[am[o]] += active_grad(o);
        }
    });
    return dz;
}

#define PERCEPT_INSTANTIATE_FUSED(T)                                                          \
    template Tensor<T> bn_relu_pool_forward(const Tensor<T>&, const BatchNormStats<T>&,       \
                                            const BatchNormLayer<T>&, std::size_t,            \
                                            PoolRecord<T>&);                                  \
    template Tensor<T> bn_relu_pool_backward(const Tensor<T>&, const BatchNormStats<T>&,      \
                                             const BatchNormLayer<T>&, const PoolRecord<T>&,  \
                                             const Tensor<T>&, BatchNormGrads<T>&);

PERCEPT_INSTANTIATE_FUSED(float)
PERCEPT_INSTANTIATE_FUSED(double)

}  // namespace percept::nn
