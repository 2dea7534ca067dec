#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "percept/core/random.hpp"
#include "percept/nn/network.hpp"

namespace percept::testing {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t failures = 0;
    std::size_t kinks = 0;  // skipped: a perturbation changed a pool winner or ReLU state
    std::size_t strict_failures = 0;  // same check with a 1e-12 floor
    // Over tolerance at `step` but within it at step / 10, with the error
    // shrinking at least 10x: central-difference truncation, not a bug.
    std::size_t truncation = 0;
    // Entry with the largest relative error.
    std::size_t worst_span = 0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Piecewise-linear state of a train-mode pass: every pool winner and
/// whether each pooled ReLU output is active.
inline std::vector<std::uint32_t> activation_pattern(const nn::Tape<double>& tape) {
    std::vector<std::uint32_t> p;
    for (std::size_t b = 0; b < tape.blocks.size(); ++b) {
        const auto& bt = tape.blocks[b];
        p.insert(p.end(), bt.pool.argmax.begin(), bt.pool.argmax.end());
        const nn::Tensor<double>& next = b + 1 < tape.blocks.size() ? tape.blocks[b + 1].input : tape.output;
        if (!bt.conv_out.empty())
            for (double v : next.data()) p.push_back(v > 0.0);
    }
    return p;
}

/// Loss sum_i c_i * out_i with random c; compares every parameter gradient
/// of a train-mode pass with a central difference. The relative error is
/// |a - n| / max(|a|, |n|, floor). The floor acts as an absolute tolerance
/// of tol * floor for near-zero gradients, where the O(step^2) truncation
/// error of the central difference dominates. Entries over tolerance are
/// re-measured at step / 10 (see GradCheckResult::truncation).
inline GradCheckResult check_gradients(nn::Network<double> net, const nn::Tensor<double>& input, Rng& rng,
                                       double step = 1e-3, double tol = 1e-3, double floor = 1e-3) {
    nn::Tape<double> tape;
    const nn::Tensor<double> out = net.forward(input, nn::Mode::train, &tape);
    nn::Tensor<double> coeff(out.dims());
    for (double& c : coeff.data()) c = rng.normal();
    const nn::Gradients<double> grads = net.backward(tape, coeff);
    const auto analytic = nn::gradient_spans(grads);

    const auto base = activation_pattern(tape);
    bool kink = false;
    auto loss = [&]() {
        nn::Tape<double> t;
        const nn::Tensor<double> o = net.forward(input, nn::Mode::train, &t);
        if (activation_pattern(t) != base) kink = true;
        double s = 0.0;
        for (std::size_t i = 0; i < o.size(); ++i) s += coeff[i] * o[i];
        return s;
    };

    GradCheckResult r;
    auto params = net.parameters();
    for (std::size_t p = 0; p < params.size(); ++p)
        for (std::size_t i = 0; i < params[p].size(); ++i) {
            double& x = params[p][i];
            const double saved = x;
            auto central = [&](double h) {
                kink = false;
                x = saved + h;
                const double up = loss();
                x = saved - h;
                const double down = loss();
                x = saved;
                return (up - down) / (2.0 * h);
            };
            const double a = analytic[p][i];
            auto rel_error = [&](double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}); };
            const double numeric = central(step);
            if (kink) {
                ++r.kinks;
                continue;
            }
            const double rel = rel_error(numeric);
            if (rel > r.max_rel_error) {
                r.max_rel_error = rel;
                r.worst_span = p;
                r.worst_index = i;
                r.worst_analytic = a;
                r.worst_numeric = numeric;
            }
            ++r.checked;
            if (rel > tol) {
                const double fine = rel_error(central(step / 10));
                if (!kink && fine <= tol && fine <= rel / 10)
                    ++r.truncation;
                else
                    ++r.failures;
            }
            if (std::abs(a - numeric) > tol * std::max({std::abs(a), std::abs(numeric), 1e-12})) ++r.strict_failures;
        }
    return r;
}

/// Random N(0, 1) tensor.
inline nn::Tensor<double> random_tensor(std::initializer_list<std::size_t> dims, Rng& rng) {
    nn::Tensor<double> t(dims);
    for (double& v : t.data()) v = rng.normal();
    return t;
}

}  // namespace percept::testing
