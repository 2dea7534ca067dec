#include "percept/net/config.hpp"

#include <stdexcept>

namespace percept::net {

std::string join(const Schedule& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out;
}

namespace {

Schedule parse_schedule(const std::string& text) {
    const auto values = split_uints(text);
    if (values.size() != kLayers)
        throw std::invalid_argument("schedule '" + text + "' must have 5 entries");
    Schedule s{};
    for (std::size_t i = 0; i < kLayers; ++i) s[i] = values[i];
    return s;
}

}  // namespace

const char* to_string(ScheduleSource s) { return s == ScheduleSource::published ? "published" : "formula"; }

ScheduleSource parse_schedule_source(const std::string& s) {
    if (s == "formula") return ScheduleSource::formula;
    if (s == "published") return ScheduleSource::published;
    throw std::invalid_argument("unknown schedule source '" + s + "' (formula|published)");
}

bool supported_tile_size(std::size_t w) {
    return w == 1 || w == 2 || w == 4 || w == 8 || w == 16 || w == 32;
}

Schedule pooling_schedule(std::size_t w, ScheduleSource source) {
    if (!supported_tile_size(w))
        throw std::invalid_argument("unsupported tile size " + std::to_string(w) +
                                    " (1, 2, 4, 8, 16 or 32)");
    if (source == ScheduleSource::published && w == 16) return {1, 2, 2, 2, 2};
    Schedule s{};
    for (std::size_t i = 0; i < kLayers; ++i) {
        const std::size_t scale = std::size_t{1} << i;
        // w and scale are powers of two, so ceil(w / scale) is 1 once scale >= w.
        const std::size_t ratio = scale >= w ? 1 : w / scale;
        s[i] = ratio > 2 ? 2 : ratio;
    }
    return s;
}

NetworkConfig NetworkConfig::make(std::size_t w, ScheduleSource source, std::size_t in,
                                  std::size_t out) {
    NetworkConfig c;
    c.tile_size = w;
    c.in_channels = in;
    c.out_channels = out;
    c.schedule_source = source;
    c.pooling = pooling_schedule(w, source);
    c.validate();
    return c;
}

void NetworkConfig::validate() const {
    if (!supported_tile_size(tile_size))
        throw std::invalid_argument("unsupported tile size " + std::to_string(tile_size));
    if (in_channels == 0 || out_channels == 0 || latent_channels == 0)
        throw std::invalid_argument("network config: channel counts must be positive");
    std::size_t product = 1;
    for (std::size_t f : pooling) {
        if (f == 0) throw std::invalid_argument("network config: pool factor 0");
        product *= f;
    }
    if (product != tile_size)
        throw std::invalid_argument("network config: pooling schedule " + join(pooling) +
                                    " does not multiply to w=" + std::to_string(tile_size));
    for (std::size_t i = 0; i < kLayers; ++i) {
        const std::size_t g = groups[i];
        if (g == 0 || layer_in(i) % g != 0 || layer_out(i) % g != 0)
            throw std::invalid_argument("network config: groups " + std::to_string(g) +
                                        " do not divide the channels of layer " +
                                        std::to_string(i + 1));
    }
}

void NetworkConfig::store(KeyValues& kv) const {
    kv.set("net.tile_size", std::uint64_t{tile_size});
    kv.set("net.in_channels", std::uint64_t{in_channels});
    kv.set("net.out_channels", std::uint64_t{out_channels});
    kv.set("net.latent_channels", std::uint64_t{latent_channels});
    kv.set("net.schedule_source", to_string(schedule_source));
    kv.set("net.pooling", join(pooling));
    kv.set("net.groups", join(groups));
}

NetworkConfig NetworkConfig::load(const KeyValues& kv) {
    NetworkConfig c;
    c.tile_size = kv.get_uint("net.tile_size");
    c.in_channels = kv.get_uint("net.in_channels");
    c.out_channels = kv.get_uint("net.out_channels");
    c.latent_channels = kv.get_uint("net.latent_channels");
    c.schedule_source = parse_schedule_source(kv.get("net.schedule_source"));
    c.pooling = parse_schedule(kv.get("net.pooling"));
    c.groups = parse_schedule(kv.get("net.groups"));
    c.validate();
    return c;
}

}  // namespace percept::net
