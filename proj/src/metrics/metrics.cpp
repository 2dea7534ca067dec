#include "percept/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace percept::metrics {

namespace {

void check_rgb(const TensorF& img, const char* what) {
    if (img.rank() != 3 || img.dim(0) != 3)
        throw std::invalid_argument(std::string(what) + ": expected a (3, H, W) image, got " +
                                    img.shape_string());
}

void check_pair(const TensorF& a, const TensorF& b, const char* what) {
    check_rgb(a, what);
    check_rgb(b, what);
    nn::require_same_shape(a, b, what);
}

void check_map(const TensorF& m, const char* what) {
    if (m.rank() != 2)
        throw std::invalid_argument(std::string(what) + ": expected an (H, W) map, got " +
                                    m.shape_string());
}

}  // namespace

std::string MetricId::label() const { return std::string(to_string(base)) + (weber ? "+weber" : ""); }

const char* to_string(BaseMetric m) {
    switch (m) {
        case BaseMetric::rmse: return "rmse";
        case BaseMetric::mald: return "mald";
        case BaseMetric::sflip: return "sflip";
    }
    return "?";
}

BaseMetric parse_base_metric(const std::string& s) {
    if (s == "rmse") return BaseMetric::rmse;
    if (s == "mald") return BaseMetric::mald;
    if (s == "sflip") return BaseMetric::sflip;
    throw std::invalid_argument("unknown metric '" + s + "' (rmse|mald|sflip)");
}

MetricId parse_metric_id(const std::string& label) {
    const std::string suffix = "+weber";
    if (label.size() > suffix.size() && label.ends_with(suffix))
        return {parse_base_metric(label.substr(0, label.size() - suffix.size())), true};
    return {parse_base_metric(label), false};
}

void JndConfig::validate() const {
    if (!(t > 0.0)) throw std::invalid_argument("jnd: sensitivity t must be > 0");
    if (!(l >= 0.0)) throw std::invalid_argument("jnd: environment luminance l must be >= 0");
}

const char* to_string(Aggregate a) { return a == Aggregate::max ? "max" : "mean"; }

Aggregate parse_aggregate(const std::string& s) {
    if (s == "mean") return Aggregate::mean;
    if (s == "max") return Aggregate::max;
    throw std::invalid_argument("unknown tile aggregate '" + s + "' (mean|max)");
}

TensorF luminance(const TensorF& rgb) {
    check_rgb(rgb, "luminance");
    const std::size_t h = rgb.dim(1), w = rgb.dim(2), n = h * w;
    TensorF out({h, w});
    const float* r = rgb.raw();
    const float* g = r + n;
    const float* b = g + n;
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(luminance(r[i], g[i], b[i]));
    return out;
}

TensorF rmse_metric(const TensorF& ref, const TensorF& img) {
    check_pair(ref, img, "rmse");
    const std::size_t h = ref.dim(1), w = ref.dim(2), n = h * w;
    TensorF out({h, w});
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            const double d = double(ref[c * n + i]) - double(img[c * n + i]);
            sq += d * d;
        }
        out[i] = static_cast<float>(std::min(1.0, std::sqrt(sq / 3.0)));
    }
    return out;
}

TensorF mald_metric(const TensorF& ref, const TensorF& img) {
    check_pair(ref, img, "mald");
    const std::size_t n = ref.dim(1) * ref.dim(2);
    TensorF out({ref.dim(1), ref.dim(2)});
    for (std::size_t i = 0; i < n; ++i) {
        const double a = luminance(ref[i], ref[n + i], ref[2 * n + i]);
        const double b = luminance(img[i], img[n + i], img[2 * n + i]);
        out[i] = static_cast<float>(std::min(1.0, std::abs(a - b)));
    }
    return out;
}

std::vector<double> gaussian_taps(double sigma, int radius) {
    if (!(sigma > 0.0) || radius < 0) throw std::invalid_argument("gaussian: bad sigma or radius");
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        taps[k + radius] = std::exp(-double(k * k) / (2.0 * sigma * sigma));
        sum += taps[k + radius];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

namespace {

/// Blur in double; input and output are (h, w) row-major.
std::vector<double> blur(const std::vector<double>& src, std::size_t h, std::size_t w,
                         const std::vector<double>& taps, int radius) {
    std::vector<double> tmp(h * w), out(h * w);
    const auto clampi = [](long v, long hi) { return static_cast<std::size_t>(std::clamp(v, 0L, hi)); };
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += taps[k + radius] * src[y * w + clampi(long(x) + k, long(w) - 1)];
            tmp[y * w + x] = acc;
        }
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += taps[k + radius] * tmp[clampi(long(y) + k, long(h) - 1) * w + x];
            out[y * w + x] = acc;
        }
    return out;
}

std::vector<double> perceptual_lightness(const TensorF& rgb) {
    const std::size_t n = rgb.dim(1) * rgb.dim(2);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i)
        p[i] = std::cbrt(std::max(0.0, luminance(rgb[i], rgb[n + i], rgb[2 * n + i])));
    return p;
}

}  // namespace

TensorF gaussian_blur(const TensorF& map, double sigma, int radius) {
    check_map(map, "gaussian_blur");
    const std::size_t h = map.dim(0), w = map.dim(1);
    const auto out = blur(std::vector<double>(map.data().begin(), map.data().end()), h, w,
                          gaussian_taps(sigma, radius), radius);
    TensorF result({h, w});
    std::transform(out.begin(), out.end(), result.data().begin(),
                   [](double v) { return static_cast<float>(v); });
    return result;
}

TensorF sflip_metric(const TensorF& ref, const TensorF& img) {
    check_pair(ref, img, "sflip");
    const std::size_t h = ref.dim(1), w = ref.dim(2);
    const auto taps = gaussian_taps(kSflipSigma, kSflipRadius);
    // Blur is linear, so blurring the difference equals differencing the blurs.
    auto diff = perceptual_lightness(ref);
    const auto other = perceptual_lightness(img);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= other[i];
    const auto blurred = blur(diff, h, w, taps, kSflipRadius);
    TensorF out({h, w});
    for (std::size_t i = 0; i < blurred.size(); ++i)
        out[i] = static_cast<float>(std::clamp(std::abs(blurred[i]), 0.0, 1.0));
    return out;
}

TensorF weber_correct(const TensorF& error, const TensorF& lum, const JndConfig& cfg) {
    cfg.validate();
    check_map(error, "weber_correct");
    nn::require_same_shape(error, lum, "weber_correct");
    TensorF out(error.dims());
    for (std::size_t i = 0; i < error.size(); ++i) {
        const double denom = double(lum[i]) + cfg.l;
        if (!(denom > 0.0))
            throw std::invalid_argument("weber_correct: L + l is zero at pixel " + std::to_string(i));
        out[i] = static_cast<float>(std::clamp(double(error[i]) / denom, 0.0, 1.0));
    }
    return out;
}

TensorF jnd_threshold(const TensorF& lum, const JndConfig& cfg) {
    cfg.validate();
    check_map(lum, "jnd_threshold");
    TensorF out(lum.dims());
    for (std::size_t i = 0; i < lum.size(); ++i)
        out[i] = static_cast<float>(cfg.t * (double(lum[i]) + cfg.l));
    return out;
}

TensorF tile_aggregate(const TensorF& map, std::size_t w, Aggregate mode) {
    check_map(map, "tile_aggregate");
    if (w == 0) throw std::invalid_argument("tile_aggregate: tile size must be positive");
    const std::size_t h = map.dim(0), width = map.dim(1);
    if (h % w != 0 || width % w != 0)
        throw std::invalid_argument("tile_aggregate: map " + map.shape_string() +
                                    " not divisible by tile size " + std::to_string(w));
    const std::size_t th = h / w, tw = width / w;
    TensorF out({th, tw});
    for (std::size_t ty = 0; ty < th; ++ty)
        for (std::size_t tx = 0; tx < tw; ++tx) {
            double sum = 0.0;
            float peak = map[ty * w * width + tx * w];
            for (std::size_t y = 0; y < w; ++y)
                for (std::size_t x = 0; x < w; ++x) {
                    const float v = map[(ty * w + y) * width + tx * w + x];
                    sum += v;
                    peak = std::max(peak, v);
                }
            out[ty * tw + tx] =
                mode == Aggregate::max ? peak : static_cast<float>(sum / double(w * w));
        }
    return out;
}

TensorF compute_metric(const MetricId& metric, const TensorF& ref, const TensorF& img,
                       const JndConfig& jnd) {
    TensorF e;
    switch (metric.base) {
        case BaseMetric::rmse: e = rmse_metric(ref, img); break;
        case BaseMetric::mald: e = mald_metric(ref, img); break;
        case BaseMetric::sflip: e = sflip_metric(ref, img); break;
    }
    if (metric.weber) e = weber_correct(e, luminance(ref), jnd);
    return e;
}

}  // namespace percept::metrics
