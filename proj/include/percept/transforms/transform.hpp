#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "percept/core/keyvalue.hpp"
#include "percept/nn/tensor.hpp"

namespace percept::transforms {

enum class Kind { identity, clamped, logistic };
enum class MuMode { precomputed, running };

/// Reparameterization of raw metric targets into the training space.
/// `mu` holds one value, or one per output channel when per_channel is set.
struct TransformSpec {
    Kind kind = Kind::clamped;
    std::vector<double> mu{0.5};
    double k_logistic = 10.0;
    MuMode mu_mode = MuMode::precomputed;
    double ema_alpha = 0.01;
    bool per_channel = false;

    void validate() const;
    double mu_for(std::size_t channel) const;

    /// Writes/reads keys prefixed with "transform.".
    void store(KeyValues& kv) const;
    static TransformSpec load(const KeyValues& kv);
};

inline constexpr double kMuMin = 1e-4;
inline constexpr double kMuMax = 1.0 - 1e-4;

double t_clamped(double y, double mu);
double t_clamped_inv(double yhat, double mu);
double t_logistic(double y, double mu, double k);
double t_logistic_inv(double yhat, double mu, double k);

double apply(const TransformSpec& spec, double y, std::size_t channel);
double invert(const TransformSpec& spec, double yhat, std::size_t channel);

/// Elementwise over an (N, C, H, W) tensor; channel c uses mu_for(c).
nn::TensorF apply(const TransformSpec& spec, const nn::TensorF& raw);
nn::TensorF invert(const TransformSpec& spec, const nn::TensorF& transformed);

/// EMA update of mu from a batch of raw (N, C, H, W) targets.
void update_mu(TransformSpec& spec, const nn::TensorF& batch_targets);

/// Mean of raw (C, H, W) or (N, C, H, W) targets, global or per channel,
/// clamped to [kMuMin, kMuMax].
std::vector<double> dataset_mu(const std::vector<const nn::TensorF*>& targets, bool per_channel);

const char* to_string(Kind kind);
Kind parse_kind(const std::string& s);
const char* to_string(MuMode mode);
MuMode parse_mu_mode(const std::string& s);

}  // namespace percept::transforms
