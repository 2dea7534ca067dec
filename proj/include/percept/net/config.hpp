#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "percept/core/keyvalue.hpp"

namespace percept::net {

enum class ScheduleSource { formula, published };

const char* to_string(ScheduleSource s);
ScheduleSource parse_schedule_source(const std::string& s);

inline constexpr std::size_t kLayers = 5;
using Schedule = std::array<std::size_t, kLayers>;

/// "2,2,2,2,1"
std::string join(const Schedule& s);

/// Hidden-channel groups per layer.
inline constexpr Schedule kGroupSchedule = {1, 1, 4, 8, 1};

/// Pool factor per layer. formula pools as early as possible:
///   2 if w / 2^i > 2 and i < 5, else ceil(w / 2^i), for i = 0..4.
/// published is the fixed w = 16 table ([1,2,2,2,2]) and falls back to formula
/// for other tile sizes.
Schedule pooling_schedule(std::size_t w, ScheduleSource source);

bool supported_tile_size(std::size_t w);

struct NetworkConfig {
    std::size_t tile_size = 16;
    std::size_t in_channels = 4;
    std::size_t out_channels = 4;
    std::size_t latent_channels = 16;
    ScheduleSource schedule_source = ScheduleSource::formula;
    Schedule pooling = pooling_schedule(16, ScheduleSource::formula);
    Schedule groups = kGroupSchedule;

    static NetworkConfig make(std::size_t w, ScheduleSource source, std::size_t in = 4,
                              std::size_t out = 4);

    /// Channel counts of layer i (in, out).
    std::size_t layer_in(std::size_t i) const { return i == 0 ? in_channels : latent_channels; }
    std::size_t layer_out(std::size_t i) const {
        return i + 1 == kLayers ? out_channels : latent_channels;
    }

    void validate() const;

    /// Writes/reads keys prefixed with "net.".
    void store(KeyValues& kv) const;
    static NetworkConfig load(const KeyValues& kv);
};

}  // namespace percept::net
