#pragma once

#include <cstddef>
#include <string>

#include "percept/core/rate.hpp"
#include "percept/nn/tensor.hpp"

namespace percept::metrics {

using nn::TensorF;

enum class BaseMetric { rmse, mald, sflip };

/// A base metric plus the optional Weber ("just noticeable") correction.
struct MetricId {
    BaseMetric base = BaseMetric::mald;
    bool weber = false;

    std::string label() const;  // "mald" or "mald+weber"
    friend bool operator==(MetricId, MetricId) = default;
};

const char* to_string(BaseMetric m);
BaseMetric parse_base_metric(const std::string& s);
MetricId parse_metric_id(const std::string& label);

struct JndConfig {
    double t = 0.25;  // sensitivity threshold
    double l = 0.05;  // environment luminance

    void validate() const;
};

/// Per-pixel error of one reduced-rate image against the reference.
struct ErrorMap {
    TensorF values;  // (H, W), entries in [0, 1]
    MetricId metric;
    ShadingRate rate;
};

enum class Aggregate { mean, max };
const char* to_string(Aggregate a);
Aggregate parse_aggregate(const std::string& s);

inline constexpr double kSflipSigma = 1.5;
inline constexpr int kSflipRadius = 5;  // ceil(3 sigma)

/// Rec. 709 weights.
inline double luminance(double r, double g, double b) {
    return 0.2126 * r + 0.7152 * g + 0.0722 * b;
}

/// (3, H, W) RGB -> (H, W).
TensorF luminance(const TensorF& rgb);

TensorF rmse_metric(const TensorF& ref, const TensorF& img);
TensorF mald_metric(const TensorF& ref, const TensorF& img);
TensorF sflip_metric(const TensorF& ref, const TensorF& img);

/// Normalized 1-D Gaussian taps for offsets -radius..radius.
std::vector<double> gaussian_taps(double sigma, int radius);

/// Separable Gaussian blur of an (H, W) map with edge-clamp boundary.
TensorF gaussian_blur(const TensorF& map, double sigma, int radius);

/// E / (L + l) clamped to [0, 1]. Throws when L + l is zero anywhere.
TensorF weber_correct(const TensorF& error, const TensorF& lum, const JndConfig& cfg);

/// t (L + l) per pixel.
TensorF jnd_threshold(const TensorF& lum, const JndConfig& cfg);

/// (H, W) -> (H/w, W/w) per-tile mean or max.
TensorF tile_aggregate(const TensorF& map, std::size_t w, Aggregate mode = Aggregate::mean);

/// Base metric of `img` against `ref`, Weber corrected with the reference
/// luminance when metric.weber is set.
TensorF compute_metric(const MetricId& metric, const TensorF& ref, const TensorF& img,
                       const JndConfig& jnd);

}  // namespace percept::metrics
