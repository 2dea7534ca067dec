#include "percept/synthscene/viewpoint.hpp"

#include <cmath>

#include "percept/synthscene/render.hpp"

namespace percept::synthscene {

namespace {

Vec3 random_direction(Rng& rng) {
    for (;;) {
        const Vec3 d(rng.normal(), rng.normal(), rng.normal());
        const double n = d.norm();
        if (n > 1e-9) return d / n;
    }
}

std::optional<Camera> make_camera(const Vec3& pos, const Vec3& dir, const ViewpointConfig& cfg) {
    // Near-vertical directions give an ill-conditioned up vector.
    if (std::abs(dir.normalized().y()) > 0.99) return std::nullopt;
    Camera c = Camera::look_along(pos, dir);
    c.fov_y = cfg.fov_y;
    return c;
}

}  // namespace

bool valid_viewpoint(const Scene& scene, const Camera& camera, const ViewpointConfig& cfg) {
    if (!scene.camera_region.contains(camera.position) || scene.blocked(camera.position)) return false;
    return probe_coverage(scene, camera, cfg.probe_res) >= cfg.min_coverage;
}

bool path_clear(const Scene& scene, const Vec3& a, const Vec3& b) {
    const Vec3 d = b - a;
    const double len = d.norm();
    if (len == 0.0) return !scene.blocked(a);
    return !scene.occluded({a, d / len}, 0.0, len);
}

bool valid_pair(const Scene& scene, const ViewpointPair& pair, const ViewpointConfig& cfg) {
    return valid_viewpoint(scene, pair.cur, cfg) && valid_viewpoint(scene, pair.prev, cfg) &&
           (pair.prev.position - pair.cur.position).norm() <= cfg.max_distance(scene) &&
           path_clear(scene, pair.prev.position, pair.cur.position);
}

ViewpointPair sample_viewpoint_pair(const Scene& scene, Rng& rng, const ViewpointConfig& cfg) {
    const Region& region = scene.camera_region;
    const double d_max = cfg.max_distance(scene);
    constexpr int kPrevTries = 32;
    ViewpointPair pair;
    while (pair.attempts < cfg.max_attempts) {
        ++pair.attempts;
        const Vec3 pos(rng.uniform(region.lo.x(), region.hi.x()), rng.uniform(region.lo.y(), region.hi.y()),
                       rng.uniform(region.lo.z(), region.hi.z()));
        const auto cur = make_camera(pos, random_direction(rng), cfg);
        if (!cur || !valid_viewpoint(scene, *cur, cfg)) continue;

        for (int k = 0; k < kPrevTries && pair.attempts < cfg.max_attempts; ++k) {
            ++pair.attempts;
            const Vec3 offset = random_direction(rng) * (d_max * std::cbrt(rng.uniform()));
            const Vec3 dir = cur->forward + cfg.jitter * Vec3(rng.normal(), rng.normal(), rng.normal());
            const auto prev = make_camera(pos + offset, dir, cfg);
            if (!prev || !valid_viewpoint(scene, *prev, cfg) || !path_clear(scene, prev->position, pos))
                continue;
            pair.cur = *cur;
            pair.prev = *prev;
            return pair;
        }
    }
    throw SamplerExhausted("viewpoint sampler: no valid pair within " + std::to_string(cfg.max_attempts) +
                           " attempts in scene '" + scene.name + "'");
}

}  // namespace percept::synthscene
