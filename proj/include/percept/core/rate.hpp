#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace percept {

/// Coarse shading rate: one shading sample per u (horizontal) by v
/// (vertical) pixel block.
struct ShadingRate {
    int u = 1;
    int v = 1;

    /// Pixels covered per shading sample; larger is cheaper.
    int coverage() const { return u * v; }
    bool valid() const;
    std::string label() const;  // "2x1"

    friend bool operator==(ShadingRate, ShadingRate) = default;
};

ShadingRate parse_rate(std::string_view label);
std::vector<ShadingRate> parse_rate_list(std::string_view labels);  // "1x2,2x1"
std::string rate_list_label(const std::vector<ShadingRate>& rates);

/// The seven modeled rates in increasing cost (cheapest first).
inline constexpr std::array<ShadingRate, 7> kRatesByCost = {
    ShadingRate{4, 4}, ShadingRate{4, 2}, ShadingRate{2, 4}, ShadingRate{2, 2},
    ShadingRate{2, 1}, ShadingRate{1, 2}, ShadingRate{1, 1}};

/// Position in kRatesByCost; lower is cheaper.
int cost_rank(ShadingRate rate);

/// Default network output channels.
inline const std::vector<ShadingRate> kPredictedRates = {{1, 2}, {2, 1}, {2, 4}, {4, 2}};

}  // namespace percept
