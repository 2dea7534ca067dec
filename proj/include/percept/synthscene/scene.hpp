#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "percept/synthscene/camera.hpp"

namespace percept::synthscene {

enum class AlbedoSource { solid, checker, noise };

struct Material {
    AlbedoSource source = AlbedoSource::solid;
    Vec3 albedo = Vec3::Constant(0.7);
    Vec3 albedo2 = Vec3::Constant(0.2);  // second checker color / noise extreme
    double pattern_scale = 1.0;          // checker cell or noise lattice size
    double specular = 0.0;               // Blinn-Phong intensity
    double roughness = 1.0;              // (0, 1]; exponent 2/r^2 - 2
    double emissive = 0.0;
};

struct Sphere {
    Vec3 center;
    double radius = 1.0;
    int material = 0;
};

/// Axis-aligned box.
struct Box {
    Vec3 lo;
    Vec3 hi;
    int material = 0;
};

/// Square patch of the y = 0 plane, |x|, |z| <= half_extent, facing +y.
struct Ground {
    double half_extent = 20.0;
    int material = 0;
};

struct DirectionalLight {
    Vec3 direction = Vec3(0.3, 1.0, 0.2).normalized();  // toward the light
    double intensity = 2.0;
};

struct Region {
    Vec3 lo;
    Vec3 hi;
    Vec3 size() const { return hi - lo; }
    bool contains(const Vec3& p) const {
        return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    }
};

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    Vec3 position;
    Vec3 normal;  // world space, unit, facing the ray origin side
    int material = -1;
};

struct Scene {
    std::string name;
    std::uint64_t seed = 0;
    std::vector<Material> materials;
    std::optional<Ground> ground;
    std::vector<Sphere> spheres;
    std::vector<Box> boxes;
    DirectionalLight light;
    Region camera_region;
    double clearance = 0.25;  // min camera distance to any surface

    /// Nearest hit with t in (t_min, t_max).
    std::optional<Hit> intersect(const Ray& ray, double t_min = 0.0,
                                 double t_max = std::numeric_limits<double>::infinity()) const;

    /// True when some primitive is hit with t in (t_min, t_max).
    bool occluded(const Ray& ray, double t_min, double t_max) const;

    /// True when p is inside a primitive or closer than `clearance` to one.
    bool blocked(const Vec3& p) const;

    /// Albedo of `material` at surface point p with normal n, each channel
    /// in [0, 1]. Patterns are looked up slightly below the surface so that
    /// faces lying on a checker boundary get one consistent color.
    Vec3 albedo(int material, const Vec3& p, const Vec3& n) const;

    /// Diagonal length of the camera region.
    double region_diagonal() const { return camera_region.size().norm(); }

    /// Throws std::invalid_argument on bad material indices or albedos.
    void validate() const;
};

/// Names of the bundled scenes: diffuse, specular, checker, mixed.
const std::vector<std::string>& scene_names();

/// Fixed procedural scene; `seed` 0 selects the bundled default seed.
Scene make_scene(const std::string& name, std::uint64_t seed = 0);

/// Lattice value noise in [0, 1], smooth-step trilinear.
double value_noise(const Vec3& p, std::uint64_t seed);

}  // namespace percept::synthscene
