#include <stdexcept>

#include "percept/core/random.hpp"
#include "percept/synthscene/scene.hpp"

namespace percept::synthscene {

namespace {

enum class Style { diffuse, specular, checker, mixed };

Vec3 random_color(Rng& rng, double lo, double hi) {
    return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

Material make_material(Style style, Rng& rng) {
    Material m;
    switch (style) {
        case Style::diffuse:
            m.source = rng.uniform() < 0.5 ? AlbedoSource::solid : AlbedoSource::noise;
            m.albedo = random_color(rng, 0.2, 0.9);
            m.albedo2 = random_color(rng, 0.05, 0.5);
            m.pattern_scale = rng.uniform(0.3, 1.2);
            m.specular = rng.uniform(0.0, 0.05);
            m.roughness = rng.uniform(0.8, 1.0);
            break;
        case Style::specular:
            m.albedo = random_color(rng, 0.05, 0.5);
            m.specular = rng.uniform(0.6, 1.0);
            m.roughness = rng.uniform(0.08, 0.3);
            break;
        case Style::checker:
            m.source = AlbedoSource::checker;
            m.albedo = random_color(rng, 0.6, 0.95);
            m.albedo2 = random_color(rng, 0.02, 0.25);
            m.pattern_scale = rng.uniform(0.2, 0.8);
            m.specular = rng.uniform(0.0, 0.2);
            m.roughness = rng.uniform(0.4, 0.9);
            break;
        case Style::mixed: {
            const auto pick = static_cast<Style>(rng.below(3));
            m = make_material(pick, rng);
            break;
        }
    }
    return m;
}

Scene build(const std::string& name, Style style, std::uint64_t seed) {
    Rng rng(seed);
    Scene s;
    s.name = name;
    s.seed = seed;
    s.light.direction = Vec3(rng.uniform(-0.6, 0.6), 1.0, rng.uniform(-0.6, 0.6)).normalized();
    s.light.intensity = 2.0;

    // Courtyard: bounded ground, four walls, props scattered inside.
    constexpr double half = 12.0, wall_h = 5.0, wall_t = 0.5;
    s.materials.push_back(make_material(style, rng));
    s.ground = Ground{half, 0};
    s.materials.push_back(make_material(style, rng));
    const int wall = 1;
    s.boxes.push_back({{-half, 0.0, -half - wall_t}, {half, wall_h, -half}, wall});
    s.boxes.push_back({{-half, 0.0, half}, {half, wall_h, half + wall_t}, wall});
    s.boxes.push_back({{-half - wall_t, 0.0, -half}, {-half, wall_h, half}, wall});
    s.boxes.push_back({{half, 0.0, -half}, {half + wall_t, wall_h, half}, wall});

    for (int i = 0; i < 10; ++i) {
        const int m = static_cast<int>(s.materials.size());
        s.materials.push_back(make_material(style, rng));
        const double r = rng.uniform(0.4, 1.4);
        const Vec3 c(rng.uniform(-10.0, 10.0), r * rng.uniform(0.6, 1.6), rng.uniform(-10.0, 10.0));
        s.spheres.push_back({c, r, m});
    }
    for (int i = 0; i < 8; ++i) {
        const int m = static_cast<int>(s.materials.size());
        s.materials.push_back(make_material(style, rng));
        const Vec3 lo(rng.uniform(-10.0, 9.0), 0.0, rng.uniform(-10.0, 9.0));
        const Vec3 size(rng.uniform(0.4, 2.0), rng.uniform(0.3, 3.0), rng.uniform(0.4, 2.0));
        s.boxes.push_back({lo, lo + size, m});
    }
    if (style == Style::mixed) {
        // One glowing prop.
        Material glow;
        glow.albedo = Vec3(0.9, 0.7, 0.4);
        glow.emissive = 1.5;
        s.materials.push_back(glow);
        s.spheres.push_back({Vec3(0.0, 2.5, 0.0), 0.5, static_cast<int>(s.materials.size()) - 1});
    }

    s.camera_region = {Vec3(-9.0, 0.6, -9.0), Vec3(9.0, 3.0, 9.0)};
    s.validate();
    return s;
}

}  // namespace

const std::vector<std::string>& scene_names() {
    static const std::vector<std::string> names = {"diffuse", "specular", "checker", "mixed"};
    return names;
}

Scene make_scene(const std::string& name, std::uint64_t seed) {
    const auto& names = scene_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] != name) continue;
        return build(name, static_cast<Style>(i), seed != 0 ? seed : 1001 + i);
    }
    throw std::invalid_argument("unknown scene '" + name + "'");
}

}  // namespace percept::synthscene
