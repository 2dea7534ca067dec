#include "percept/harness/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace percept::harness {

double r2_score(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw std::invalid_argument("r2_score: size mismatch");
    if (y.size() < 2) throw std::invalid_argument("r2_score: need at least 2 values");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0.0) throw std::invalid_argument("r2_score: targets are constant");
    return 1.0 - ss_res / ss_tot;
}

bool MaeStats::consistent() const {
    const double lhs = under * static_cast<double>(under_count);
    const double rhs = total * static_cast<double>(count);
    return lhs <= rhs * (1.0 + 1e-12) + 1e-300;
}

MaeStats mae_stats(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw std::invalid_argument("mae_stats: size mismatch");
    if (y.empty()) throw std::invalid_argument("mae_stats: empty input");
    MaeStats s;
    s.count = y.size();
    double under_sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        s.total += std::abs(y[i] - yhat[i]);
        if (yhat[i] < y[i]) {
            under_sum += y[i] - yhat[i];
            ++s.under_count;
        }
    }
    s.total /= static_cast<double>(s.count);
    s.under = s.under_count ? under_sum / static_cast<double>(s.under_count) : 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = std::abs(y[i] - yhat[i]) - s.total;
        sq += d * d;
    }
    s.variance = sq / static_cast<double>(s.count);
    s.sigma = std::sqrt(s.variance);
    return s;
}

}  // namespace percept::harness
