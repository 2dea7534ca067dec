#include "percept/synthscene/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "percept/core/random.hpp"

namespace percept::synthscene {

namespace {

std::optional<double> hit_sphere(const Sphere& s, const Ray& ray, double t_min, double t_max) {
    const Vec3 oc = ray.origin - s.center;
    const double b = oc.dot(ray.dir);
    const double c = oc.squaredNorm() - s.radius * s.radius;
    const double disc = b * b - c;
    if (disc < 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    // Stable form of the two roots.
    const double q = b > 0.0 ? -(b + root) : -(b - root);
    double t0 = q, t1 = q != 0.0 ? c / q : -b;
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_min && t0 < t_max) return t0;
    if (t1 > t_min && t1 < t_max) return t1;
    return std::nullopt;
}

/// Entry distance and axis of the box face hit first.
std::optional<std::pair<double, int>> hit_box(const Box& b, const Ray& ray, double t_min,
                                              double t_max) {
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    int near_axis = 0, far_axis = 0;
    for (int a = 0; a < 3; ++a) {
        const double o = ray.origin[a], d = ray.dir[a];
        if (d == 0.0) {
            if (o < b.lo[a] || o > b.hi[a]) return std::nullopt;
            continue;
        }
        double t0 = (b.lo[a] - o) / d, t1 = (b.hi[a] - o) / d;
        if (t0 > t1) std::swap(t0, t1);
        if (t0 > t_near) t_near = t0, near_axis = a;
        if (t1 < t_far) t_far = t1, far_axis = a;
        if (t_near > t_far) return std::nullopt;
    }
    if (t_near > t_min && t_near < t_max) return std::pair{t_near, near_axis};
    if (t_far > t_min && t_far < t_max) return std::pair{t_far, far_axis};
    return std::nullopt;
}

std::optional<double> hit_ground(const Ground& g, const Ray& ray, double t_min, double t_max) {
    if (ray.dir.y() == 0.0) return std::nullopt;
    const double t = -ray.origin.y() / ray.dir.y();
    if (!(t > t_min && t < t_max)) return std::nullopt;
    const double x = ray.origin.x() + t * ray.dir.x(), z = ray.origin.z() + t * ray.dir.z();
    if (std::abs(x) > g.half_extent || std::abs(z) > g.half_extent) return std::nullopt;
    return t;
}

Vec3 face_toward(Vec3 n, const Vec3& dir) { return n.dot(dir) > 0.0 ? Vec3(-n) : n; }

double box_distance(const Box& b, const Vec3& p) {
    const Vec3 q = (b.lo - p).cwiseMax(p - b.hi).cwiseMax(0.0);
    return q.norm();
}

}  // namespace

std::optional<Hit> Scene::intersect(const Ray& ray, double t_min, double t_max) const {
    Hit best;
    best.t = t_max;
    bool found = false;
    if (ground) {
        if (auto t = hit_ground(*ground, ray, t_min, best.t)) {
            best.t = *t;
            best.position = ray.origin + *t * ray.dir;
            best.position.y() = 0.0;
            best.normal = face_toward(Vec3::UnitY(), ray.dir);
            best.material = ground->material;
            found = true;
        }
    }
    for (const auto& s : spheres) {
        if (auto t = hit_sphere(s, ray, t_min, best.t)) {
            best.t = *t;
            best.position = ray.origin + *t * ray.dir;
            best.normal = face_toward((best.position - s.center).normalized(), ray.dir);
            best.material = s.material;
            found = true;
        }
    }
    for (const auto& b : boxes) {
        if (auto h = hit_box(b, ray, t_min, best.t)) {
            const auto [t, axis] = *h;
            best.t = t;
            best.position = ray.origin + t * ray.dir;
            // Snap onto the face plane that was hit.
            const double face =
                std::abs(best.position[axis] - b.lo[axis]) < std::abs(best.position[axis] - b.hi[axis])
                    ? b.lo[axis]
                    : b.hi[axis];
            best.position[axis] = face;
            Vec3 n = Vec3::Zero();
            n[axis] = face == b.lo[axis] ? -1.0 : 1.0;
            best.normal = face_toward(n, ray.dir);
            best.material = b.material;
            found = true;
        }
    }
    if (!found) return std::nullopt;
    return best;
}

bool Scene::occluded(const Ray& ray, double t_min, double t_max) const {
    if (ground && hit_ground(*ground, ray, t_min, t_max)) return true;
    for (const auto& s : spheres)
        if (hit_sphere(s, ray, t_min, t_max)) return true;
    for (const auto& b : boxes)
        if (hit_box(b, ray, t_min, t_max)) return true;
    return false;
}

bool Scene::blocked(const Vec3& p) const {
    if (ground && std::abs(p.x()) <= ground->half_extent + clearance &&
        std::abs(p.z()) <= ground->half_extent + clearance && p.y() < clearance)
        return true;
    for (const auto& s : spheres)
        if ((p - s.center).norm() < s.radius + clearance) return true;
    for (const auto& b : boxes)
        if (box_distance(b, p) < clearance) return true;
    return false;
}

double value_noise(const Vec3& p, std::uint64_t seed) {
    const Vec3 f = p.array().floor();
    const Vec3 frac = p - f;
    auto lattice = [&](double x, double y, double z) {
        auto key = [](double v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); };
        const std::uint64_t h =
            splitmix64(seed ^ splitmix64(key(x) ^ splitmix64(key(y) ^ splitmix64(key(z)))));
        return static_cast<double>(h >> 11) * 0x1.0p-53;
    };
    auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
    const double sx = smooth(frac.x()), sy = smooth(frac.y()), sz = smooth(frac.z());
    double acc = 0.0;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const double w = (dx ? sx : 1.0 - sx) * (dy ? sy : 1.0 - sy) * (dz ? sz : 1.0 - sz);
                acc += w * lattice(f.x() + dx, f.y() + dy, f.z() + dz);
            }
    return std::clamp(acc, 0.0, 1.0);
}

Vec3 Scene::albedo(int material, const Vec3& p, const Vec3& n) const {
    const Material& m = materials.at(static_cast<std::size_t>(material));
    const Vec3 q = (p - 1e-4 * m.pattern_scale * n) / m.pattern_scale;
    switch (m.source) {
        case AlbedoSource::solid:
            return m.albedo;
        case AlbedoSource::checker: {
            const auto cell = static_cast<std::int64_t>(std::floor(q.x()) + std::floor(q.y()) +
                                                        std::floor(q.z()));
            return (cell & 1) ? m.albedo2 : m.albedo;
        }
        case AlbedoSource::noise: {
            const double t = value_noise(q, seed + static_cast<std::uint64_t>(material));
            return m.albedo + t * (m.albedo2 - m.albedo);
        }
    }
    return m.albedo;
}

void Scene::validate() const {
    auto check_index = [&](int m) {
        if (m < 0 || static_cast<std::size_t>(m) >= materials.size())
            throw std::invalid_argument("scene: material index out of range");
    };
    for (const auto& m : materials) {
        for (const Vec3* c : {&m.albedo, &m.albedo2})
            if ((c->array() < 0.0).any() || (c->array() > 1.0).any())
                throw std::invalid_argument("scene: albedo outside [0, 1]");
        if (!(m.roughness > 0.0 && m.roughness <= 1.0) || m.specular < 0.0 || m.emissive < 0.0 ||
            !(m.pattern_scale > 0.0))
            throw std::invalid_argument("scene: bad material parameters");
    }
    if (ground) check_index(ground->material);
    for (const auto& s : spheres) {
        check_index(s.material);
        if (!(s.radius > 0.0)) throw std::invalid_argument("scene: sphere radius must be positive");
    }
    for (const auto& b : boxes) {
        check_index(b.material);
        if ((b.lo.array() >= b.hi.array()).any()) throw std::invalid_argument("scene: empty box");
    }
    if ((camera_region.lo.array() > camera_region.hi.array()).any())
        throw std::invalid_argument("scene: empty camera region");
    if (std::abs(light.direction.norm() - 1.0) > 1e-9 || light.intensity < 0.0)
        throw std::invalid_argument("scene: bad light");
}

}  // namespace percept::synthscene
