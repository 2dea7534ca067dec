#pragma once

#include <cstddef>
#include <span>

namespace percept::harness {

/// Coefficient of determination 1 - SS_res / SS_tot. Throws
/// std::invalid_argument for fewer than 2 values or constant y.
double r2_score(std::span<const double> y, std::span<const double> yhat);

struct MaeStats {
    double total = 0.0;     // mean |y - yhat|
    double under = 0.0;     // mean (y - yhat) where yhat < y; 0 if none
    double sigma = 0.0;     // std-dev of |y - yhat|
    double variance = 0.0;  // sigma^2
    std::size_t count = 0;
    std::size_t under_count = 0;

    /// under * under_count <= total * count, up to rounding.
    bool consistent() const;
};

/// Throws std::invalid_argument on empty or mismatched input.
MaeStats mae_stats(std::span<const double> y, std::span<const double> yhat);

}  // namespace percept::harness
