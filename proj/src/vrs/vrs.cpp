#include "percept/vrs/vrs.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace percept::vrs {

namespace {

std::size_t slot(ShadingRate r) { return static_cast<std::size_t>(cost_rank(r)); }

/// Rates in the order their extrapolation dependencies resolve.
constexpr std::array<ShadingRate, 6> kDependencyOrder = {
    ShadingRate{1, 2}, ShadingRate{2, 1}, ShadingRate{2, 2},
    ShadingRate{4, 2}, ShadingRate{2, 4}, ShadingRate{4, 4}};

}  // namespace

void ExtrapolationConfig::validate() const {
    if (!(kappa > 1.0)) throw std::invalid_argument("extrapolation: kappa must be > 1");
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (!predicted[i].valid() || predicted[i] == ShadingRate{1, 1})
            throw std::invalid_argument("extrapolation: bad predicted rate " + predicted[i].label());
        for (std::size_t j = 0; j < i; ++j)
            if (predicted[i] == predicted[j])
                throw std::invalid_argument("extrapolation: duplicate rate " + predicted[i].label());
    }
}

TilePrediction extrapolate_rates(const std::vector<std::vector<double>>& channels, std::size_t tiles_x,
                                 std::size_t tiles_y, const ExtrapolationConfig& cfg) {
    cfg.validate();
    if (channels.size() != cfg.predicted.size())
        throw std::invalid_argument("extrapolate_rates: expected " + std::to_string(cfg.predicted.size()) +
                                    " channels, got " + std::to_string(channels.size()));
    TilePrediction p;
    p.tiles_x = tiles_x;
    p.tiles_y = tiles_y;
    const std::size_t n = tiles_x * tiles_y;
    std::array<bool, kRatesByCost.size()> known{};
    p.of({1, 1}).assign(n, 0.0);
    p.provenance[slot({1, 1})] = Provenance::implicit_zero;
    known[slot({1, 1})] = true;
    for (std::size_t c = 0; c < channels.size(); ++c) {
        if (channels[c].size() != n)
            throw std::invalid_argument("extrapolate_rates: channel " + cfg.predicted[c].label() +
                                        " has the wrong tile count");
        p.of(cfg.predicted[c]) = channels[c];
        p.provenance[slot(cfg.predicted[c])] = Provenance::predicted;
        known[slot(cfg.predicted[c])] = true;
    }

    for (ShadingRate r : kDependencyOrder) {
        if (known[slot(r)]) continue;
        ShadingRate a, b;  // max(kappa_a * a, b)
        double kappa_a = 1.0;
        if (r.u == r.v) {
            a = {r.u / 2, r.v};
            b = {r.u, r.v / 2};
        } else if (r.u > r.v) {
            a = {r.u / 2, r.v / 2};
            b = {r.u / 2, r.v};
            kappa_a = cfg.kappa;
        } else {
            a = {r.u / 2, r.v / 2};
            b = {r.u, r.v / 2};
            kappa_a = cfg.kappa;
        }
        if (!a.valid() || !b.valid() || !known[slot(a)] || !known[slot(b)])
            throw std::invalid_argument("extrapolate_rates: cannot derive " + r.label() +
                                        " from the predicted channels");
        const auto& va = p.of(a);
        const auto& vb = p.of(b);
        auto& out = p.of(r);
        out.resize(n);
        for (std::size_t t = 0; t < n; ++t) out[t] = std::max(va[t] * kappa_a, vb[t]);
        p.provenance[slot(r)] = Provenance::extrapolated;
        known[slot(r)] = true;
    }
    return p;
}

ShadingRate choose_rate(const TilePrediction& pred, std::size_t tile, double threshold) {
    for (ShadingRate r : kRatesByCost) {
        if (r == ShadingRate{1, 1}) break;
        if (pred.of(r)[tile] < threshold) return r;
    }
    return {1, 1};
}

RateDecisionMap choose_mode(const TilePrediction& pred, const std::vector<double>& thresholds, std::size_t w) {
    if (thresholds.size() != pred.tiles()) throw std::invalid_argument("choose_mode: threshold count mismatch");
    RateDecisionMap m;
    m.tiles_x = pred.tiles_x;
    m.tiles_y = pred.tiles_y;
    m.w = w;
    m.thresholds = thresholds;
    m.rates.resize(pred.tiles());
    for (std::size_t t = 0; t < pred.tiles(); ++t) m.rates[t] = choose_rate(pred, t, thresholds[t]);
    return m;
}

RateDecisionMap choose_mode(const TilePrediction& pred, double threshold, std::size_t w) {
    return choose_mode(pred, std::vector<double>(pred.tiles(), threshold), w);
}

std::vector<double> threshold_for(const metrics::MetricId& metric, const metrics::JndConfig& jnd,
                                  const std::vector<double>& tile_luminance, ThresholdForm form) {
    jnd.validate();
    if (form == ThresholdForm::automatic) form = metric.weber ? ThresholdForm::constant : ThresholdForm::luminance;
    if (metric.weber && form == ThresholdForm::luminance)
        throw std::invalid_argument("threshold_for: Weber-corrected metric " + metric.label() +
                                    " already divides by luminance; use the constant threshold");
    if (!metric.weber && form == ThresholdForm::constant)
        throw std::invalid_argument("threshold_for: raw metric " + metric.label() +
                                    " needs a luminance-dependent threshold");
    std::vector<double> out(tile_luminance.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = form == ThresholdForm::constant ? jnd.t : jnd.t * (tile_luminance[i] + jnd.l);
    return out;
}

std::array<std::uint8_t, 3> rate_color(ShadingRate r) {
    if (r == ShadingRate{1, 1}) return {255, 255, 255};
    if (r == ShadingRate{4, 4}) return {255, 0, 0};
    if (r.coverage() == 2) return {0, 255, 0};
    return {255, 255, 0};
}

Rgb8Image render_rate_map(const RateDecisionMap& map) {
    if (map.rates.size() != map.tiles_x * map.tiles_y || map.w == 0)
        throw std::invalid_argument("render_rate_map: malformed decision map");
    const int w = static_cast<int>(map.w);
    Rgb8Image img(static_cast<int>(map.tiles_x) * w, static_cast<int>(map.tiles_y) * w);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto c = rate_color(map.rates[static_cast<std::size_t>(y / w) * map.tiles_x + x / w]);
            std::copy(c.begin(), c.end(), img.at(x, y));
        }
    return img;
}

std::string rate_map_text(const RateDecisionMap& map) {
    std::string s;
    for (std::size_t y = 0; y < map.tiles_y; ++y) {
        for (std::size_t x = 0; x < map.tiles_x; ++x) {
            if (x) s += ' ';
            s += map.rates[y * map.tiles_x + x].label();
        }
        s += '\n';
    }
    return s;
}

RateDecisionMap parse_rate_map_text(const std::string& text, std::size_t w) {
    RateDecisionMap m;
    m.w = w;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::istringstream words(line);
        std::string word;
        std::size_t n = 0;
        while (words >> word) {
            m.rates.push_back(parse_rate(word));
            ++n;
        }
        if (m.tiles_y == 0) m.tiles_x = n;
        else if (n != m.tiles_x) throw std::invalid_argument("rate map text: ragged rows");
        ++m.tiles_y;
    }
    return m;
}

}  // namespace percept::vrs
