#include "percept/core/rate.hpp"

#include <stdexcept>

namespace percept {

bool ShadingRate::valid() const {
    for (const auto& r : kRatesByCost)
        if (r == *this) return true;
    return false;
}

std::string ShadingRate::label() const { return std::to_string(u) + "x" + std::to_string(v); }

ShadingRate parse_rate(std::string_view label) {
    if (label.size() == 3 && label[1] == 'x' && label[0] >= '1' && label[0] <= '9' &&
        label[2] >= '1' && label[2] <= '9') {
        const ShadingRate r{label[0] - '0', label[2] - '0'};
        if (r.valid()) return r;
    }
    throw std::invalid_argument("unsupported shading rate '" + std::string(label) +
                                "' (1x1, 1x2, 2x1, 2x2, 2x4, 4x2, 4x4)");
}

std::vector<ShadingRate> parse_rate_list(std::string_view labels) {
    std::vector<ShadingRate> out;
    std::size_t start = 0;
    while (start <= labels.size()) {
        const std::size_t end = labels.find(',', start);
        out.push_back(parse_rate(labels.substr(start, end == std::string_view::npos ? end : end - start)));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = i + 1; j < out.size(); ++j)
            if (out[i] == out[j]) throw std::invalid_argument("duplicate rate " + out[i].label());
    return out;
}

std::string rate_list_label(const std::vector<ShadingRate>& rates) {
    std::string s;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (i) s += ',';
        s += rates[i].label();
    }
    return s;
}

int cost_rank(ShadingRate rate) {
    for (std::size_t i = 0; i < kRatesByCost.size(); ++i)
        if (kRatesByCost[i] == rate) return static_cast<int>(i);
    throw std::invalid_argument("unsupported shading rate " + rate.label());
}

}  // namespace percept
