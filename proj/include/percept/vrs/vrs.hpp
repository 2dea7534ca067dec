#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "percept/core/png.hpp"
#include "percept/core/rate.hpp"
#include "percept/metrics/metrics.hpp"

namespace percept::vrs {

struct ExtrapolationConfig {
    double kappa = 2.13;  // error growth per halving of the rate
    std::vector<ShadingRate> predicted = kPredictedRates;

    void validate() const;
};

enum class Provenance { implicit_zero, predicted, extrapolated };

/// Per-tile error estimate for every modeled rate, indexed like
/// kRatesByCost. 1x1 is identically 0.
struct TilePrediction {
    std::size_t tiles_x = 0;
    std::size_t tiles_y = 0;
    std::array<std::vector<double>, kRatesByCost.size()> values;
    std::array<Provenance, kRatesByCost.size()> provenance{};

    std::size_t tiles() const { return tiles_x * tiles_y; }
    const std::vector<double>& of(ShadingRate r) const { return values[static_cast<std::size_t>(cost_rank(r))]; }
    std::vector<double>& of(ShadingRate r) { return values[static_cast<std::size_t>(cost_rank(r))]; }
};

/// Channel c of `channels` holds the per-tile values of cfg.predicted[c],
/// each a row-major tiles_y x tiles_x grid. Missing rates are filled by the
/// halving rule: square rates take the max of their two halves, rectangular
/// ones max(kappa * half-both, half-long-side).
TilePrediction extrapolate_rates(const std::vector<std::vector<double>>& channels, std::size_t tiles_x,
                                 std::size_t tiles_y, const ExtrapolationConfig& cfg = {});

struct RateDecisionMap {
    std::size_t tiles_x = 0;
    std::size_t tiles_y = 0;
    std::size_t w = 16;
    std::vector<ShadingRate> rates;  // row-major
    std::vector<double> thresholds;  // per tile
};

/// Cheapest rate, in kRatesByCost order, whose error is below the tile's
/// threshold; 1x1 when none is.
ShadingRate choose_rate(const TilePrediction& pred, std::size_t tile, double threshold);

RateDecisionMap choose_mode(const TilePrediction& pred, double threshold, std::size_t w = 16);
RateDecisionMap choose_mode(const TilePrediction& pred, const std::vector<double>& thresholds,
                            std::size_t w = 16);

enum class ThresholdForm { automatic, constant, luminance };

/// Weber-corrected metrics compare against t everywhere; raw metrics
/// against t (L_tile + l). Asking for the luminance form with a Weber
/// metric throws std::invalid_argument, as does the constant form with a
/// raw metric.
std::vector<double> threshold_for(const metrics::MetricId& metric, const metrics::JndConfig& jnd,
                                  const std::vector<double>& tile_luminance,
                                  ThresholdForm form = ThresholdForm::automatic);

/// Legend color of a rate: white 1x1, green 2x1/1x2, yellow 2x2/2x4/4x2,
/// red 4x4.
std::array<std::uint8_t, 3> rate_color(ShadingRate r);

/// One w x w block per tile.
Rgb8Image render_rate_map(const RateDecisionMap& map);

/// Rate labels, one row of tiles per line, separated by spaces.
std::string rate_map_text(const RateDecisionMap& map);
RateDecisionMap parse_rate_map_text(const std::string& text, std::size_t w = 16);

}  // namespace percept::vrs
