#include <doctest.h>

#include <cmath>

#include "percept/core/binary_io.hpp"
#include "percept/core/random.hpp"
#include "percept/net/model.hpp"
#include "percept/nn/activation.hpp"
#include "percept/nn/rmsprop.hpp"
#include "percept/nn/weights_io.hpp"
#include "support/gradcheck.hpp"

using namespace percept;
using namespace percept::nn;
using percept::testing::random_tensor;

namespace {

/// Straight-loop grouped 3x3 convolution with zero padding.
Tensor<double> conv_oracle(const Tensor<double>& in, const ConvLayer<double>& L) {
    const std::size_t n = in.batch(), h = in.height(), w = in.width();
    Tensor<double> out({n, L.out_channels, h, w});
    const std::size_t ipg = L.in_per_group(), opg = L.out_per_group();
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t o = 0; o < L.out_channels; ++o)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) {
                    double s = L.bias[o];
                    const std::size_t g = o / opg;
                    for (std::size_t i = 0; i < ipg; ++i)
                        for (int ky = 0; ky < 3; ++ky)
                            for (int kx = 0; kx < 3; ++kx) {
                                const long yy = long(y) + ky - 1, xx = long(x) + kx - 1;
                                if (yy < 0 || xx < 0 || yy >= long(h) || xx >= long(w)) continue;
                                s += L.weights[((o * ipg + i) * 3 + ky) * 3 + kx] *
                                     in.at(b, g * ipg + i, std::size_t(yy), std::size_t(xx));
                            }
                    out.at(b, o, y, x) = s;
                }
    return out;
}

ConvLayer<double> random_conv(std::size_t in, std::size_t out, std::size_t groups, Rng& rng) {
    auto L = ConvLayer<double>::make(in, out, groups);
    for (double& v : L.weights.data()) v = rng.normal();
    for (double& v : L.bias) v = rng.normal();
    return L;
}

}  // namespace

TEST_CASE("conv: centre tap reproduces the input") {
    auto L = ConvLayer<float>::make(3, 3, 3);
    for (std::size_t o = 0; o < 3; ++o) L.weights[o * 9 + 4] = 1.f;
    Rng rng(1);
    TensorF in({2, 3, 5, 7});
    for (float& v : in.data()) v = float(rng.normal());
    const TensorF out = conv3x3_forward(in, L);
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(out[i] == in[i]);
}

TEST_CASE("conv: ones kernel counts the in-bounds taps") {
    auto L = ConvLayer<float>::make(1, 1, 1);
    L.weights.fill(1.f);
    const TensorF out = conv3x3_forward(TensorF({1, 1, 4, 5}, 1.f), L);
    CHECK(out.at(0, 0, 0, 0) == 4.f);
    CHECK(out.at(0, 0, 3, 4) == 4.f);
    CHECK(out.at(0, 0, 0, 2) == 6.f);
    CHECK(out.at(0, 0, 2, 0) == 6.f);
    CHECK(out.at(0, 0, 1, 1) == 9.f);
    CHECK(out.at(0, 0, 2, 3) == 9.f);
}

TEST_CASE("conv: matches the loop oracle for every group layout") {
    Rng rng(2);
    for (auto [in, out, g] : {std::tuple{4, 16, 1}, {16, 16, 4}, {16, 16, 8}, {16, 4, 1}, {6, 4, 2}}) {
        const auto L = random_conv(in, out, g, rng);
        const auto x = random_tensor({2, std::size_t(in), 6, 9}, rng);
        const auto got = conv3x3_forward(x, L);
        const auto want = conv_oracle(x, L);
        for (std::size_t i = 0; i < got.size(); ++i) REQUIRE(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv: groups do not see each other's inputs") {
    Rng rng(3);
    const auto L = random_conv(8, 8, 4, rng);
    auto x = random_tensor({1, 8, 5, 5}, rng);
    const auto before = conv3x3_forward(x, L);
    for (std::size_t i = 0; i < 25; ++i) x.plane(0, 7)[i] += 10.0;  // group 3 only
    const auto after = conv3x3_forward(x, L);
    for (std::size_t o = 0; o < 6; ++o)
        for (std::size_t i = 0; i < 25; ++i) CHECK(after.plane(0, o)[i] == before.plane(0, o)[i]);
    CHECK(after.plane(0, 6)[12] != before.plane(0, 6)[12]);
}

TEST_CASE("conv: float and double paths agree") {
    Rng rng(4);
    const auto Ld = random_conv(16, 16, 4, rng);
    ConvLayer<float> Lf = ConvLayer<float>::make(16, 16, 4);
    for (std::size_t i = 0; i < Ld.weights.size(); ++i) Lf.weights[i] = float(Ld.weights[i]);
    for (std::size_t i = 0; i < Ld.bias.size(); ++i) Lf.bias[i] = float(Ld.bias[i]);
    auto xd = random_tensor({2, 16, 8, 40}, rng);
    TensorF xf(xd.dims());
    for (std::size_t i = 0; i < xd.size(); ++i) xd[i] = xf[i] = float(xd[i]);
    const auto a = conv3x3_forward(xd, Ld);
    const auto b = conv3x3_forward(xf, Lf);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(double(b[i]) == doctest::Approx(a[i]).epsilon(1e-4).scale(10));
}

TEST_CASE("batch norm: two values normalize to +-1/sqrt(1+eps)") {
    auto L = BatchNormLayer<double>::make(1);
    Tensor<double> x({2, 1, 1, 1});
    x[0] = 1.0;
    x[1] = -1.0;
    BatchNormCache<double> cache;
    const auto y = batchnorm_forward(x, L, Mode::train, &cache);
    CHECK(y[0] == doctest::Approx(0.999995).epsilon(1e-9));
    CHECK(y[1] == doctest::Approx(-0.999995).epsilon(1e-9));
    // Running stats: unbiased variance 2 blended with momentum 0.1.
    CHECK(L.running_mean[0] == doctest::Approx(0.0));
    CHECK(L.running_var[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 2.0));
    const auto z = batchnorm_infer(x, L);
    CHECK(z[0] == doctest::Approx(1.0 / std::sqrt(1.1 + 1e-5)));
}

TEST_CASE("activations") {
    CHECK(relu(-2.0) == 0.0);
    CHECK(relu(3.0) == 3.0);
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(800.0) == 1.0);
    CHECK(sigmoid(-800.0) == 0.0);
    CHECK(sigmoid(1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    Tensor<double> s({1, 1, 1, 2});
    s[0] = 0.25;
    s[1] = 0.5;
    const auto g = activation_backward(s, Tensor<double>({1, 1, 1, 2}, 1.0), Activation::sigmoid);
    CHECK(g[0] == doctest::Approx(0.1875));
    CHECK(g[1] == doctest::Approx(0.25));
}

TEST_CASE("max pool: block maxima, first tie wins, gradient routing") {
    Tensor<double> x({1, 1, 2, 4});
    const double v[] = {1, 5, 2, 2, 3, 0, 2, 2};
    std::copy(std::begin(v), std::end(v), x.raw());
    const auto r = maxpool_forward(x, 2);
    CHECK(r.output[0] == 5);
    CHECK(r.output[1] == 2);
    CHECK(r.argmax[0] == 1);
    CHECK(r.argmax[1] == 2);
    Tensor<double> g({1, 1, 1, 2});
    g[0] = 7;
    g[1] = 9;
    const auto gi = maxpool_backward(g, r.argmax, x.dims());
    CHECK(gi[1] == 7);
    CHECK(gi[2] == 9);
    CHECK(gi[0] + gi[3] + gi[4] + gi[5] + gi[6] + gi[7] == 0);
    CHECK(maxpool_forward(x, 1).output[5] == 0);
}

TEST_CASE("fused batch norm + ReLU + pool equals the separate ops") {
    Rng rng(5);
    for (std::size_t pool : {1u, 2u}) {
        for (double sign : {1.0, -1.0}) {
            auto L = BatchNormLayer<double>::make(3);
            for (std::size_t c = 0; c < 3; ++c) {
                L.gamma[c] = sign * (0.5 + rng.uniform());
                L.beta[c] = 0.3 * rng.normal();
            }
            const auto z = random_tensor({2, 3, 6, 8}, rng);
            const auto go = random_tensor({2, 3, 6 / pool, 8 / pool}, rng);

            auto L1 = L;
            BatchNormCache<double> cache;
            const auto bn = batchnorm_forward(z, L1, Mode::train, &cache);
            const auto act = activation_forward(bn, Activation::relu);
            const auto pr = maxpool_forward(act, pool);
            BatchNormGrads<double> g1;
            g1.reset(L1);
            const auto dz1 = batchnorm_backward(
                cache, L1, activation_backward(act, maxpool_backward(go, pr.argmax, act.dims()), Activation::relu), g1);

            auto L2 = L;
            const auto stats = batchnorm_statistics(z, L2);
            PoolRecord<double> rec;
            const auto out = bn_relu_pool_forward(z, stats, L2, pool, rec);
            BatchNormGrads<double> g2;
            g2.reset(L2);
            const auto dz2 = bn_relu_pool_backward(z, stats, L2, rec, go, g2);

            for (std::size_t i = 0; i < out.size(); ++i) REQUIRE(out[i] == doctest::Approx(pr.output[i]).epsilon(1e-12));
            for (std::size_t i = 0; i < dz1.size(); ++i) REQUIRE(dz2[i] == doctest::Approx(dz1[i]).epsilon(1e-9).scale(1));
            for (std::size_t c = 0; c < 3; ++c) {
                CHECK(g2.gamma[c] == doctest::Approx(g1.gamma[c]).epsilon(1e-9));
                CHECK(g2.beta[c] == doctest::Approx(g1.beta[c]).epsilon(1e-9));
                CHECK(L2.running_var[c] == doctest::Approx(L1.running_var[c]));
            }
        }
    }
}

TEST_CASE("gradients: 2-layer network matches central differences") {
    Rng rng(6);
    Network<double> net;
    Block<double> a;
    a.conv = random_conv(4, 8, 1, rng);
    a.bn = BatchNormLayer<double>::make(8);
    a.pool = 2;
    Block<double> b;
    b.conv = random_conv(8, 2, 1, rng);
    b.pool = 2;
    net.blocks = {a, b};
    for (int batch = 0; batch < 3; ++batch) {
        const auto x = random_tensor({2, 4, 8, 8}, rng);
        const auto r = percept::testing::check_gradients(net, x, rng);
        CHECK(r.failures == 0);
        CHECK(r.checked + r.kinks == net.parameter_count());
        CHECK(r.checked > r.kinks * 10);
    }
}

TEST_CASE("gradients: 5-layer recommended network matches central differences") {
    Rng rng(7);
    const auto cfg = net::NetworkConfig::make(16, net::ScheduleSource::formula, 4, 4);
    const auto model = net::build_network(cfg, 9);
    auto d = model.net.cast<double>();
    for (auto& blk : d.blocks)
        for (double& v : blk.conv.bias) v = 0.1 * rng.normal();
    const auto x = random_tensor({2, 4, 16, 16}, rng);
    const auto r = percept::testing::check_gradients(d, x, rng);
    CHECK(r.failures == 0);
    CHECK(r.checked > r.kinks * 5);
}

TEST_CASE("rmsprop: hand-computed step and decay") {
    std::vector<double> p{1.0, -2.0};
    const std::vector<double> g{0.5, 0.0};
    OptimizerState st;
    std::vector<std::span<double>> ps{p};
    std::vector<std::span<const double>> gs{g};
    rmsprop_step(std::span<const std::span<double>>(ps), std::span<const std::span<const double>>(gs), st);
    CHECK(p[0] == doctest::Approx(1.0 - 1e-4 * 0.5 / (std::sqrt(0.025) + 1e-8)).epsilon(1e-14));
    CHECK(p[1] == -2.0);
    CHECK(st.learning_rate == doctest::Approx(1e-4 * (1.0 - 1e-4)).epsilon(1e-15));
    CHECK(st.accumulators[0][0] == doctest::Approx(0.025));
    rmsprop_step(std::span<const std::span<double>>(ps), std::span<const std::span<const double>>(gs), st);
    CHECK(st.accumulators[0][0] == doctest::Approx(0.9 * 0.025 + 0.1 * 0.25));
    CHECK(st.steps == 2);
}

TEST_CASE("weights file: round trip, size, corruption") {
    const auto cfg = net::NetworkConfig::make(16, net::ScheduleSource::formula, 4, 4);
    auto model = net::build_network(cfg, 3);
    Rng rng(8);
    for (auto& b : model.net.blocks)
        if (b.bn)
            for (std::size_t c = 0; c < b.bn->channels(); ++c) {
                b.bn->running_mean[c] = float(rng.normal());
                b.bn->running_var[c] = float(1.0 + rng.uniform());
            }
    CHECK(model.net.parameter_count() == 4516);
    std::size_t running = 0;
    for (const auto& b : model.net.blocks)
        if (b.bn) running += 2 * b.bn->channels();
    CHECK(model.net.parameter_count() + running == 4644);

    const auto bytes = save_network(model.net, "k=v\n");
    CHECK(bytes.size() <= 32 * 1024);
    const auto loaded = load_network(bytes);
    CHECK(loaded.metadata == "k=v\n");
    REQUIRE(loaded.network.blocks.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        const auto& a = model.net.blocks[i];
        const auto& b = loaded.network.blocks[i];
        CHECK(a.conv.groups == b.conv.groups);
        CHECK(std::equal(a.conv.weights.data().begin(), a.conv.weights.data().end(), b.conv.weights.data().begin()));
        CHECK(a.conv.bias == b.conv.bias);
        CHECK(a.bn.has_value() == b.bn.has_value());
        if (a.bn) {
            CHECK(a.bn->running_mean == b.bn->running_mean);
            CHECK(a.bn->running_var == b.bn->running_var);
            CHECK(a.bn->gamma == b.bn->gamma);
        }
    }
    auto bad = bytes;
    bad[bytes.size() / 2] ^= 1;
    CHECK_THROWS_AS(load_network(bad), FormatError);
    CHECK_THROWS_AS(load_network(std::span(bytes).first(bytes.size() - 3)), FormatError);
    auto magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS_AS(load_network(magic), FormatError);
}
