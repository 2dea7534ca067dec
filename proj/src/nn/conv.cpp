#include "percept/nn/conv.hpp"

#include <experimental/simd>
#include <stdexcept>
#include <string>

#include "percept/core/parallel.hpp"

namespace percept::nn {

namespace stdx = std::experimental;

namespace {

/// Copies `channels` planes of h*w into a zero-bordered (h+2)*(w+2) layout.
template <typename T>
std::vector<T> pad_planes(const T* src, std::size_t channels, std::size_t h, std::size_t w) {
    const std::size_t pw = w + 2;
    const std::size_t pplane = (h + 2) * pw;
    std::vector<T> padded(channels * pplane, T{});
    for (std::size_t c = 0; c < channels; ++c) {
        const T* s = src + c * h * w;
        T* d = padded.data() + c * pplane + pw + 1;
        for (std::size_t y = 0; y < h; ++y)
            std::copy(s + y * w, s + (y + 1) * w, d + y * pw);
    }
    return padded;
}

/// Forward kernel for OB consecutive output channels that share one input
/// group. `in` points at the group's first padded input plane and `wts` at
/// the weights of the first output channel in the block.
template <typename T, int OB>
struct ForwardBlock {
    using V = stdx::native_simd<T>;
    static constexpr std::size_t L = V::size();

    const T* in;
    std::size_t cig, h, w;
    const T* wts;
    const T* bias;
    T* out;

    template <int XC>
    void vector_body(std::size_t y, std::size_t x) const {
        const std::size_t pw = w + 2;
        const std::size_t pplane = (h + 2) * pw;
        V acc[OB][XC];
#pragma GCC unroll 8
        for (int ob = 0; ob < OB; ++ob)
#pragma GCC unroll 4
            for (int xc = 0; xc < XC; ++xc) acc[ob][xc] = V(bias[ob]);

        for (std::size_t i = 0; i < cig; ++i) {
            const T* base = in + i * pplane + y * pw + x;
#pragma GCC unroll 3
            for (int ky = 0; ky < 3; ++ky) {
#pragma GCC unroll 3
                for (int kx = 0; kx < 3; ++kx) {
                    V v[XC];
#pragma GCC unroll 4
                    for (int xc = 0; xc < XC; ++xc)
                        v[xc] = V(base + ky * pw + kx + xc * L, stdx::element_aligned);
#pragma GCC unroll 8
                    for (int ob = 0; ob < OB; ++ob) {
                        const V wv(wts[(ob * cig + i) * 9 + ky * 3 + kx]);
#pragma GCC unroll 4
                        for (int xc = 0; xc < XC; ++xc) acc[ob][xc] += wv * v[xc];
                    }
                }
            }
        }
        const std::size_t plane = h * w;
#pragma GCC unroll 8
        for (int ob = 0; ob < OB; ++ob)
#pragma GCC unroll 4
            for (int xc = 0; xc < XC; ++xc)
                acc[ob][xc].copy_to(out + ob * plane + y * w + x + xc * L, stdx::element_aligned);
    }

    void scalar_body(std::size_t y, std::size_t x) const {
        const std::size_t pw = w + 2;
        const std::size_t pplane = (h + 2) * pw;
        for (int ob = 0; ob < OB; ++ob) {
            T acc = bias[ob];
            for (std::size_t i = 0; i < cig; ++i) {
                const T* base = in + i * pplane + y * pw + x;
                const T* k = wts + (ob * cig + i) * 9;
                for (int ky = 0; ky < 3; ++ky)
                    for (int kx = 0; kx < 3; ++kx) acc += k[ky * 3 + kx] * base[ky * pw + kx];
            }
            out[ob * h * w + y * w + x] = acc;
        }
    }

    void run_row(std::size_t y) const {
        constexpr int XC = OB >= 8 ? 2 : 4;
        std::size_t x = 0;
        for (; x + XC * L <= w; x += XC * L) vector_body<XC>(y, x);
        for (; x + L <= w; x += L) vector_body<1>(y, x);
        for (; x < w; ++x) scalar_body(y, x);
    }
};

/// Splits `count` output channels into blocks of 8/4/2/1.
template <typename Fn>
void for_each_block(std::size_t count, Fn&& make_and_run) {
    std::size_t o = 0;
    while (o < count) {
        const std::size_t left = count - o;
        if (left >= 8) {
            make_and_run(std::integral_constant<int, 8>{}, o);
            o += 8;
        } else if (left >= 4) {
            make_and_run(std::integral_constant<int, 4>{}, o);
            o += 4;
        } else if (left >= 2) {
            make_and_run(std::integral_constant<int, 2>{}, o);
            o += 2;
        } else {
            make_and_run(std::integral_constant<int, 1>{}, o);
            o += 1;
        }
    }
}

template <typename T>
void forward_padded(const T* padded, std::size_t h, std::size_t w, const ConvLayer<T>& layer,
                    T* out) {
    const std::size_t cig = layer.in_per_group();
    const std::size_t cog = layer.out_per_group();
    const std::size_t pplane = (h + 2) * (w + 2);
    const std::size_t plane = h * w;
    // Rows outermost so the three input rows stay cached across all outputs.
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t g = 0; g < layer.groups; ++g) {
            const T* gin = padded + g * cig * pplane;
            for_each_block(cog, [&](auto ob_tag, std::size_t local) {
                constexpr int OB = decltype(ob_tag)::value;
                const std::size_t o = g * cog + local;
                ForwardBlock<T, OB>{gin,
                                    cig,
                                    h,
                                    w,
                                    layer.weights.raw() + o * cig * 9,
                                    layer.bias.data() + o,
                                    out + o * plane}
                    .run_row(y);
            });
        }
    }
}

/// Weight-gradient kernel for OB output channels against one input channel.
template <typename T, int OB>
void weight_grad_block(const T* padded_in, const T* grad_out, std::size_t h, std::size_t w,
                       T* dst /* OB entries of 9, stride cig*9 */, std::size_t dst_stride) {
    using V = stdx::native_simd<T>;
    constexpr std::size_t L = V::size();
    const std::size_t pw = w + 2;
    const std::size_t plane = h * w;

    V acc[OB][9];
    for (int ob = 0; ob < OB; ++ob)
        for (int t = 0; t < 9; ++t) acc[ob][t] = V(T{});
    const std::size_t wv = w - w % L;
    for (std::size_t y = 0; y < h; ++y) {
        const T* base = padded_in + y * pw;
        for (std::size_t x = 0; x < wv; x += L) {
            V d[OB];
            for (int ob = 0; ob < OB; ++ob)
                d[ob] = V(grad_out + ob * plane + y * w + x, stdx::element_aligned);
#pragma GCC unroll 3
            for (int ky = 0; ky < 3; ++ky)
#pragma GCC unroll 3
                for (int kx = 0; kx < 3; ++kx) {
                    const V v(base + ky * pw + kx + x, stdx::element_aligned);
                    for (int ob = 0; ob < OB; ++ob) acc[ob][ky * 3 + kx] += d[ob] * v;
                }
        }
    }
    T tail[OB][9] = {};
    if (wv < w)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = wv; x < w; ++x)
                for (int ob = 0; ob < OB; ++ob) {
                    const T d = grad_out[ob * plane + y * w + x];
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx)
                            tail[ob][ky * 3 + kx] += d * padded_in[(y + ky) * pw + kx + x];
                }
    for (int ob = 0; ob < OB; ++ob)
        for (int t = 0; t < 9; ++t)
            dst[ob * dst_stride + t] += stdx::reduce(acc[ob][t]) + tail[ob][t];
}

template <typename T>
T plane_sum(const T* p, std::size_t n) {
    using V = stdx::native_simd<T>;
    constexpr std::size_t L = V::size();
    V acc[4] = {V(T{}), V(T{}), V(T{}), V(T{})};
    std::size_t i = 0;
    for (; i + 4 * L <= n; i += 4 * L)
        for (int k = 0; k < 4; ++k) acc[k] += V(p + i + k * L, stdx::element_aligned);
    T sum = stdx::reduce((acc[0] + acc[1]) + (acc[2] + acc[3]));
    for (; i < n; ++i) sum += p[i];
    return sum;
}

/// Layer whose forward pass computes the input gradient of `layer`:
/// channels transposed within each group, kernel rotated by 180 degrees.
template <typename T>
ConvLayer<T> transposed(const ConvLayer<T>& layer) {
    ConvLayer<T> t = ConvLayer<T>::make(layer.out_channels, layer.in_channels, layer.groups);
    const std::size_t cig = layer.in_per_group();
    const std::size_t cog = layer.out_per_group();
    for (std::size_t g = 0; g < layer.groups; ++g)
        for (std::size_t o = 0; o < cog; ++o)
            for (std::size_t i = 0; i < cig; ++i)
                for (std::size_t k = 0; k < 9; ++k)
                    t.weights[((g * cig + i) * cog + o) * 9 + (8 - k)] =
                        layer.weights[((g * cog + o) * cig + i) * 9 + k];
    return t;
}

template <typename T>
void check_input(const Tensor<T>& input, const ConvLayer<T>& layer) {
    if (input.rank() != 4) throw std::invalid_argument("conv3x3: input must be rank 4");
    if (input.channels() != layer.in_channels)
        throw std::invalid_argument("conv3x3: input has " + std::to_string(input.channels()) +
                                    " channels, layer expects " +
                                    std::to_string(layer.in_channels));
}

}  // namespace

template <typename T>
ConvLayer<T> ConvLayer<T>::make(std::size_t in_channels, std::size_t out_channels,
                                std::size_t groups) {
    if (in_channels == 0 || out_channels == 0 || groups == 0)
        throw std::invalid_argument("conv3x3: channel and group counts must be positive");
    if (in_channels % groups != 0 || out_channels % groups != 0)
        throw std::invalid_argument("conv3x3: groups (" + std::to_string(groups) +
                                    ") must divide in (" + std::to_string(in_channels) +
                                    ") and out (" + std::to_string(out_channels) + ") channels");
    ConvLayer layer;
    layer.in_channels = in_channels;
    layer.out_channels = out_channels;
    layer.groups = groups;
    layer.weights = Tensor<T>({out_channels, in_channels / groups, 3, 3});
    layer.bias.assign(out_channels, T{});
    return layer;
}

template <typename T>
void ConvLayer<T>::validate() const {
    if (groups == 0 || in_channels % groups != 0 || out_channels % groups != 0)
        throw std::invalid_argument("conv3x3: groups must divide both channel counts");
    if (weights.rank() != 4 || weights.dim(0) != out_channels ||
        weights.dim(1) != in_channels / groups || weights.dim(2) != 3 || weights.dim(3) != 3)
        throw std::invalid_argument("conv3x3: weight shape " + weights.shape_string() +
                                    " does not match layer");
    if (bias.size() != out_channels) throw std::invalid_argument("conv3x3: bias length mismatch");
}

template <typename T>
void conv3x3_forward_item(const T* in, std::size_t h, std::size_t w, const ConvLayer<T>& layer,
                          T* out) {
    const auto padded = pad_planes(in, layer.in_channels, h, w);
    forward_padded(padded.data(), h, w, layer, out);
}

template <typename T>
Tensor<T> conv3x3_forward(const Tensor<T>& input, const ConvLayer<T>& layer) {
    layer.validate();
    check_input(input, layer);
    const std::size_t n = input.batch(), h = input.height(), w = input.width();
    Tensor<T> out({n, layer.out_channels, h, w}, uninitialized);
    parallel_for(n, [&](std::size_t b) {
        conv3x3_forward_item(input.item(b).data(), h, w, layer, out.item(b).data());
    });
    return out;
}

template <typename T>
void conv3x3_backward_item(const T* in, const T* grad_out, std::size_t h, std::size_t w,
                           const ConvLayer<T>& layer, ConvGrads<T>& grads, T* grad_in) {
    if (grads.weights.size() != layer.weights.size() || grads.bias.size() != layer.bias.size())
        throw std::invalid_argument("conv3x3 backward: gradient buffers not sized for layer");
    const std::size_t cig = layer.in_per_group();
    const std::size_t cog = layer.out_per_group();
    const std::size_t plane = h * w;
    const std::size_t pplane = (h + 2) * (w + 2);

    const auto padded = pad_planes(in, layer.in_channels, h, w);
    for (std::size_t g = 0; g < layer.groups; ++g) {
        for_each_block(cog, [&](auto ob_tag, std::size_t local) {
            constexpr int OB = decltype(ob_tag)::value;
            constexpr int WOB = OB >= 2 ? 2 : 1;
            for (std::size_t sub = 0; sub < static_cast<std::size_t>(OB); sub += WOB) {
                const std::size_t o = g * cog + local + sub;
                for (std::size_t i = 0; i < cig; ++i)
                    weight_grad_block<T, WOB>(padded.data() + (g * cig + i) * pplane,
                                              grad_out + o * plane, h, w,
                                              grads.weights.data() + (o * cig + i) * 9, cig * 9);
            }
        });
    }
    for (std::size_t o = 0; o < layer.out_channels; ++o)
        grads.bias[o] += plane_sum(grad_out + o * plane, plane);

    if (grad_in) {
        const ConvLayer<T> t = transposed(layer);
        const auto padded_grad = pad_planes(grad_out, layer.out_channels, h, w);
        forward_padded(padded_grad.data(), h, w, t, grad_in);
    }
}

template <typename T>
Tensor<T> conv3x3_backward(const Tensor<T>& input, const ConvLayer<T>& layer,
                           const Tensor<T>& grad_out, ConvGrads<T>& grads, bool want_input_grad) {
    layer.validate();
    check_input(input, layer);
    const std::size_t n = input.batch(), h = input.height(), w = input.width();
    if (grad_out.rank() != 4 || grad_out.batch() != n || grad_out.channels() != layer.out_channels ||
        grad_out.height() != h || grad_out.width() != w)
        throw std::invalid_argument("conv3x3 backward: gradient shape " + grad_out.shape_string() +
                                    " does not match forward output");
    if (grads.weights.empty()) grads.reset(layer);

    Tensor<T> grad_in;
    if (want_input_grad) grad_in = Tensor<T>(input.dims(), uninitialized);
    // Per-item gradients summed in batch order: identical for any worker count.
    std::vector<ConvGrads<T>> per_item(n);
    parallel_for(n, [&](std::size_t b) {
        per_item[b].reset(layer);
        conv3x3_backward_item(input.item(b).data(), grad_out.item(b).data(), h, w, layer,
                              per_item[b], want_input_grad ? grad_in.item(b).data() : nullptr);
    });
    for (const auto& item : per_item) {
        for (std::size_t i = 0; i < item.weights.size(); ++i) grads.weights[i] += item.weights[i];
        for (std::size_t i = 0; i < item.bias.size(); ++i) grads.bias[i] += item.bias[i];
    }
    return grad_in;
}

#define PERCEPT_INSTANTIATE_CONV(T)                                                              \
    template struct ConvLayer<T>;                                                                \
    template Tensor<T> conv3x3_forward(const Tensor<T>&, const ConvLayer<T>&);                   \
    template void conv3x3_forward_item(const T*, std::size_t, std::size_t, const ConvLayer<T>&, \
                                       T*);                                                      \
    template void conv3x3_backward_item(const T*, const T*, std::size_t, std::size_t,           \
                                        const ConvLayer<T>&, ConvGrads<T>&, T*);                 \
    template Tensor<T> conv3x3_backward(const Tensor<T>&, const ConvLayer<T>&, const Tensor<T>&, \
                                        ConvGrads<T>&, bool);

PERCEPT_INSTANTIATE_CONV(float)
PERCEPT_INSTANTIATE_CONV(double)

}  // namespace percept::nn
