#include "percept/nn/maxpool.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include "percept/core/parallel.hpp"

namespace percept::nn {

template <typename T>
MaxPoolResult<T> maxpool_forward(const Tensor<T>& input, std::size_t factor) {
    if (input.rank() != 4) throw std::invalid_argument("maxpool: input must be rank 4");
    if (factor == 0) throw std::invalid_argument("maxpool: factor must be positive");
    const std::size_t n = input.batch(), c = input.channels(), h = input.height(),
                      w = input.width();
    if (h % factor != 0 || w % factor != 0)
        throw std::invalid_argument("maxpool: spatial dims " + std::to_string(h) + "x" +
                                    std::to_string(w) + " not divisible by factor " +
                                    std::to_string(factor));
    if (input.size() > std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument("maxpool: tensor too large for 32-bit argmax");

    const std::size_t oh = h / factor, ow = w / factor;
    MaxPoolResult<T> r{Tensor<T>({n, c, oh, ow}), std::vector<std::uint32_t>(n * c * oh * ow)};
    parallel_for(n, [&](std::size_t b) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const std::size_t in_base = (b * c + ch) * h * w;
            const std::size_t out_base = (b * c + ch) * oh * ow;
            const T* src = input.raw() + in_base;
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    std::size_t best = (oy * factor) * w + ox * factor;
                    for (std::size_t dy = 0; dy < factor; ++dy)
                        for (std::size_t dx = 0; dx < factor; ++dx) {
                            const std::size_t idx = (oy * factor + dy) * w + ox * factor + dx;
                            if (src[idx] > src[best]) best = idx;
                        }
                    const std::size_t o = out_base + oy * ow + ox;
                    r.output[o] = src[best];
                    r.argmax[o] = static_cast<std::uint32_t>(in_base + best);
                }
        }
    });
    return r;
}

template <typename T>
Tensor<T> maxpool_backward(const Tensor<T>& grad_out, const std::vector<std::uint32_t>& argmax,
                           std::span<const std::size_t> input_dims) {
    if (argmax.size() != grad_out.size())
        throw std::invalid_argument("maxpool backward: argmax does not match gradient");
    Tensor<T> grad_in(input_dims);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        if (argmax[i] >= grad_in.size())
            throw std::invalid_argument("maxpool backward: argmax index out of range");
        grad_in[argmax[i]] += grad_out[i];
    }
    return grad_in;
}

template MaxPoolResult<float> maxpool_forward(const Tensor<float>&, std::size_t);
template MaxPoolResult<double> maxpool_forward(const Tensor<double>&, std::size_t);
template Tensor<float> maxpool_backward(const Tensor<float>&, const std::vector<std::uint32_t>&,
                                        std::span<const std::size_t>);
template Tensor<double> maxpool_backward(const Tensor<double>&, const std::vector<std::uint32_t>&,
                                         std::span<const std::size_t>);

}  // namespace percept::nn
