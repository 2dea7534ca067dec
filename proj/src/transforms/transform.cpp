#include "percept/transforms/transform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace percept::transforms {

namespace {

double logistic(double y, double mu, double k) { return 1.0 / (1.0 + std::exp(-k * (y - mu))); }

void check_mu(double mu) {
    if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("transform: mu must lie in (0, 1)");
}

}  // namespace

void TransformSpec::validate() const {
    if (mu.empty()) throw std::invalid_argument("transform: mu list is empty");
    for (double m : mu) check_mu(m);
    if (!per_channel && mu.size() != 1)
        throw std::invalid_argument("transform: a shared mu must be a single value");
    if (!(k_logistic > 0.0)) throw std::invalid_argument("transform: k must be > 0");
    if (!(ema_alpha > 0.0 && ema_alpha < 1.0))
        throw std::invalid_argument("transform: ema alpha must lie in (0, 1)");
}

double TransformSpec::mu_for(std::size_t channel) const {
    if (!per_channel) return mu.at(0);
    if (channel >= mu.size())
        throw std::out_of_range("transform: no mu for channel " + std::to_string(channel));
    return mu[channel];
}

double t_clamped(double y, double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("t_clamped: mu must be > 0");
    return std::clamp(y / (2.0 * mu), 0.0, 1.0);
}

double t_clamped_inv(double yhat, double mu) { return yhat * 2.0 * mu; }

double t_logistic(double y, double mu, double k) {
    const double s0 = logistic(0.0, mu, k), s1 = logistic(1.0, mu, k);
    return (logistic(y, mu, k) - s0) / (s1 - s0);
}

double t_logistic_inv(double yhat, double mu, double k) {
    if (yhat <= 0.0) return 0.0;
    if (yhat >= 1.0) return 1.0;
    const double s0 = logistic(0.0, mu, k), s1 = logistic(1.0, mu, k);
    const double s = s0 + yhat * (s1 - s0);
    return std::clamp(mu - std::log(1.0 / s - 1.0) / k, 0.0, 1.0);
}

double apply(const TransformSpec& spec, double y, std::size_t channel) {
    switch (spec.kind) {
        case Kind::identity: return y;
        case Kind::clamped: return t_clamped(y, spec.mu_for(channel));
        case Kind::logistic: return t_logistic(y, spec.mu_for(channel), spec.k_logistic);
    }
    throw std::logic_error("transform: unknown kind");
}

double invert(const TransformSpec& spec, double yhat, std::size_t channel) {
    switch (spec.kind) {
        case Kind::identity: return yhat;
        case Kind::clamped: return t_clamped_inv(yhat, spec.mu_for(channel));
        case Kind::logistic: return t_logistic_inv(yhat, spec.mu_for(channel), spec.k_logistic);
    }
    throw std::logic_error("transform: unknown kind");
}

namespace {

template <typename Fn>
nn::TensorF map_channels(const nn::TensorF& in, Fn fn) {
    if (in.rank() != 4) throw std::invalid_argument("transform: expected an (N, C, H, W) tensor");
    nn::TensorF out(in.dims());
    const std::size_t plane = in.plane_size();
    for (std::size_t n = 0; n < in.batch(); ++n)
        for (std::size_t c = 0; c < in.channels(); ++c) {
            const float* s = in.plane(n, c).data();
            float* d = out.plane(n, c).data();
            for (std::size_t p = 0; p < plane; ++p) d[p] = static_cast<float>(fn(double(s[p]), c));
        }
    return out;
}

}  // namespace

nn::TensorF apply(const TransformSpec& spec, const nn::TensorF& raw) {
    spec.validate();
    return map_channels(raw, [&](double y, std::size_t c) { return apply(spec, y, c); });
}

nn::TensorF invert(const TransformSpec& spec, const nn::TensorF& transformed) {
    spec.validate();
    return map_channels(transformed, [&](double y, std::size_t c) { return invert(spec, y, c); });
}

namespace {

std::vector<double> channel_means(const std::vector<const nn::TensorF*>& targets, bool per_channel) {
    std::vector<double> sum, count;
    for (const nn::TensorF* t : targets) {
        if (t->rank() != 3 && t->rank() != 4)
            throw std::invalid_argument("transform: expected (C, H, W) or (N, C, H, W) targets");
        const std::size_t items = t->rank() == 4 ? t->dim(0) : 1;
        const std::size_t chans = t->dim(t->rank() - 3);
        const std::size_t plane = t->dim(t->rank() - 2) * t->dim(t->rank() - 1);
        const std::size_t channels = per_channel ? chans : 1;
        if (sum.empty()) {
            sum.assign(channels, 0.0);
            count.assign(channels, 0.0);
        } else if (sum.size() != channels) {
            throw std::invalid_argument("transform: channel count differs between samples");
        }
        for (std::size_t n = 0; n < items; ++n)
            for (std::size_t c = 0; c < chans; ++c) {
                const float* p = t->raw() + (n * chans + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) sum[per_channel ? c : 0] += p[i];
                count[per_channel ? c : 0] += double(plane);
            }
    }
    if (sum.empty()) throw std::invalid_argument("transform: no targets");
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] /= count[c];
    return sum;
}

}  // namespace

std::vector<double> dataset_mu(const std::vector<const nn::TensorF*>& targets, bool per_channel) {
    auto mu = channel_means(targets, per_channel);
    for (double& m : mu) m = std::clamp(m, kMuMin, kMuMax);
    return mu;
}

void update_mu(TransformSpec& spec, const nn::TensorF& batch_targets) {
    if (spec.mu_mode != MuMode::running)
        throw std::invalid_argument("update_mu: transform uses a precomputed mu");
    if (batch_targets.size() == 0) throw std::invalid_argument("update_mu: empty batch");
    const auto mean = channel_means({&batch_targets}, spec.per_channel);
    if (mean.size() != spec.mu.size())
        throw std::invalid_argument("update_mu: batch channel count does not match mu");
    for (std::size_t c = 0; c < spec.mu.size(); ++c)
        spec.mu[c] = std::clamp((1.0 - spec.ema_alpha) * spec.mu[c] + spec.ema_alpha * mean[c],
                                kMuMin, kMuMax);
}

const char* to_string(Kind kind) {
    switch (kind) {
        case Kind::identity: return "identity";
        case Kind::clamped: return "clamped";
        case Kind::logistic: return "logistic";
    }
    return "?";
}

Kind parse_kind(const std::string& s) {
    if (s == "identity") return Kind::identity;
    if (s == "clamped") return Kind::clamped;
    if (s == "logistic") return Kind::logistic;
    throw std::invalid_argument("unknown transform '" + s + "' (identity|clamped|logistic)");
}

const char* to_string(MuMode mode) { return mode == MuMode::running ? "running" : "precomputed"; }

MuMode parse_mu_mode(const std::string& s) {
    if (s == "running") return MuMode::running;
    if (s == "precomputed") return MuMode::precomputed;
    throw std::invalid_argument("unknown mu mode '" + s + "' (precomputed|running)");
}

void TransformSpec::store(KeyValues& kv) const {
    kv.set("transform.kind", to_string(kind));
    kv.set("transform.mu", join_doubles(mu));
    kv.set("transform.k", k_logistic);
    kv.set("transform.mu_mode", to_string(mu_mode));
    kv.set("transform.ema_alpha", ema_alpha);
    kv.set("transform.per_channel", per_channel ? "1" : "0");
}

TransformSpec TransformSpec::load(const KeyValues& kv) {
    TransformSpec spec;
    spec.kind = parse_kind(kv.get("transform.kind"));
    spec.mu = split_doubles(kv.get("transform.mu"));
    spec.k_logistic = kv.get_double("transform.k");
    spec.mu_mode = parse_mu_mode(kv.get("transform.mu_mode"));
    spec.ema_alpha = kv.get_double("transform.ema_alpha");
    spec.per_channel = kv.get("transform.per_channel") == "1";
    spec.validate();
    return spec;
}

}  // namespace percept::transforms
