#pragma once

#include <cstddef>
#include <stdexcept>

#include "percept/core/random.hpp"
#include "percept/synthscene/scene.hpp"

namespace percept::synthscene {

struct ViewpointConfig {
    double min_coverage = 0.8;       // fraction of probe pixels showing geometry
    int probe_res = 32;
    double max_distance_frac = 0.03; // d_max as a fraction of the region diagonal
    double jitter = 0.02;            // std-dev of the previous view direction change
    std::size_t max_attempts = 10000;
    double fov_y = 1.0471975511965976;

    double max_distance(const Scene& scene) const { return max_distance_frac * scene.region_diagonal(); }
};

struct ViewpointPair {
    Camera prev;
    Camera cur;
    std::size_t attempts = 0;
};

class SamplerExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inside the camera region, clear of every primitive and with enough
/// geometry coverage.
bool valid_viewpoint(const Scene& scene, const Camera& camera, const ViewpointConfig& cfg);

/// True when the open segment a-b hits no geometry.
bool path_clear(const Scene& scene, const Vec3& a, const Vec3& b);

/// All predicates the sampler enforces, re-checked on a finished pair.
bool valid_pair(const Scene& scene, const ViewpointPair& pair, const ViewpointConfig& cfg);

/// Rejection-samples a current viewpoint and a nearby previous one. Every
/// candidate camera counts as one attempt; throws SamplerExhausted when the
/// budget runs out.
ViewpointPair sample_viewpoint_pair(const Scene& scene, Rng& rng, const ViewpointConfig& cfg = {});

}  // namespace percept::synthscene
