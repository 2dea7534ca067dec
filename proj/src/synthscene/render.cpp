#include "percept/synthscene/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "percept/core/parallel.hpp"

namespace percept::synthscene {

namespace {

/// Range of ray parameters whose view depth lies in (near, far).
std::pair<double, double> depth_range(const Camera& cam, const Ray& ray) {
    const double cos_theta = ray.dir.dot(cam.forward);
    return {cam.near / cos_theta, cam.far / cos_theta};
}

}  // namespace

double GBufferFrame::coverage() const {
    std::size_t n = 0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) n += sky(x, y) ? 0 : 1;
    return static_cast<double>(n) / (static_cast<double>(width) * height);
}

GBufferFrame render_gbuffer(const Scene& scene, const Camera& camera, int width, int height) {
    camera.validate();
    if (width <= 0 || height <= 0) throw std::invalid_argument("render_gbuffer: empty frame");
    GBufferFrame f;
    f.width = width;
    f.height = height;
    f.camera = camera;
    const auto h = static_cast<std::size_t>(height), w = static_cast<std::size_t>(width);
    f.depth = TensorF({h, w}, static_cast<float>(camera.far));
    f.normal = TensorF({3, h, w});
    f.diffuse = TensorF({3, h, w});
    f.specular = TensorF({h, w});
    f.roughness = TensorF({h, w});
    f.shadow = TensorF({h, w});
    f.emissive = TensorF({h, w});
    f.position = TensorF({3, h, w});
    const std::size_t plane = h * w;

    parallel_for(h, [&](std::size_t y) {
        for (std::size_t x = 0; x < w; ++x) {
            const Ray ray = camera.pixel_ray(static_cast<double>(x), static_cast<double>(y), width, height);
            const auto [t0, t1] = depth_range(camera, ray);
            const auto hit = scene.intersect(ray, t0, t1);
            if (!hit) continue;
            const std::size_t i = y * w + x;
            const Material& m = scene.materials[static_cast<std::size_t>(hit->material)];
            const Vec3 nv = camera.dir_to_view(hit->normal);
            const Vec3 albedo = scene.albedo(hit->material, hit->position, hit->normal);
            f.depth[i] = static_cast<float>(hit->t * ray.dir.dot(camera.forward));
            for (int c = 0; c < 3; ++c) {
                f.normal[c * plane + i] = static_cast<float>(nv[c]);
                f.diffuse[c * plane + i] = static_cast<float>(albedo[c]);
                f.position[c * plane + i] = static_cast<float>(hit->position[c]);
            }
            f.specular[i] = static_cast<float>(m.specular);
            f.roughness[i] = static_cast<float>(m.roughness);
            f.emissive[i] = static_cast<float>(m.emissive);
            const double eps = 1e-4 * (1.0 + hit->position.norm());
            const Ray shadow_ray{hit->position + eps * hit->normal, scene.light.direction};
            f.shadow[i] = scene.occluded(shadow_ray, 0.0, std::numeric_limits<double>::infinity()) ? 0.f : 1.f;
        }
    });
    return f;
}

double probe_coverage(const Scene& scene, const Camera& camera, int res) {
    camera.validate();
    std::size_t hits = 0;
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
            const Ray ray = camera.pixel_ray(x, y, res, res);
            const auto [t0, t1] = depth_range(camera, ray);
            if (scene.occluded(ray, t0, t1)) ++hits;
        }
    return static_cast<double>(hits) / (static_cast<double>(res) * res);
}

double phong_exponent(double roughness) {
    return std::max(1.0, 2.0 / (roughness * roughness) - 2.0);
}

Eigen::Vector3f shade_pixel(const GBufferFrame& f, int x, int y, const DirectionalLight& light) {
    const std::size_t i = f.index(x, y);
    const std::size_t plane = static_cast<std::size_t>(f.width) * f.height;
    const Vec3 n(f.normal[i], f.normal[plane + i], f.normal[2 * plane + i]);
    const Vec3 albedo(f.diffuse[i], f.diffuse[plane + i], f.diffuse[2 * plane + i]);
    const Vec3 world(f.position[i], f.position[plane + i], f.position[2 * plane + i]);
    const Vec3 l = f.camera.dir_to_view(light.direction);
    const Vec3 v = -f.camera.to_view(world).normalized();
    const double shadow = f.shadow[i];
    const double ndotl = n.dot(l);

    Vec3 color = albedo * (kAmbient + f.emissive[i]);
    if (ndotl > 0.0 && shadow > 0.0) {
        color += albedo * (light.intensity * ndotl * shadow);
        const Vec3 half = (l + v).normalized();
        const double spec = std::pow(std::max(0.0, n.dot(half)), phong_exponent(f.roughness[i]));
        color += Vec3::Constant(light.intensity * shadow * f.specular[i] * spec);
    }
    Eigen::Vector3f out;
    for (int c = 0; c < 3; ++c) out[c] = static_cast<float>(std::clamp(color[c] / (1.0 + color[c]), 0.0, 1.0));
    return out;
}

namespace {

void shade_block(const GBufferFrame& f, int x0, int y0, int u, int v, const DirectionalLight& light,
                 TensorF& out) {
    const std::size_t plane = static_cast<std::size_t>(f.width) * f.height;
    int sx = x0 + u / 2, sy = y0 + v / 2;
    if (f.sky(sx, sy)) {
        // Center sample missed geometry; use the first geometry pixel.
        bool found = false;
        for (int y = y0; y < y0 + v && !found; ++y)
            for (int x = x0; x < x0 + u && !found; ++x)
                if (!f.sky(x, y)) sx = x, sy = y, found = true;
    }
    const Eigen::Vector3f value =
        f.sky(sx, sy) ? Eigen::Vector3f::Zero() : shade_pixel(f, sx, sy, light);
    for (int y = y0; y < y0 + v; ++y)
        for (int x = x0; x < x0 + u; ++x) {
            const std::size_t i = f.index(x, y);
            const bool sky = f.sky(x, y);
            for (int c = 0; c < 3; ++c) out[c * plane + i] = sky ? kSkyColor[c] : value[c];
        }
}

}  // namespace

TensorF shade(const GBufferFrame& f, ShadingRate rate, const DirectionalLight& light) {
    if (!rate.valid()) throw std::invalid_argument("shade: invalid rate " + rate.label());
    if (f.width % rate.u != 0 || f.height % rate.v != 0)
        throw std::invalid_argument("shade: frame not divisible by rate " + rate.label());
    TensorF out({3, static_cast<std::size_t>(f.height), static_cast<std::size_t>(f.width)}, nn::uninitialized);
    parallel_for(static_cast<std::size_t>(f.height / rate.v), [&](std::size_t by) {
        for (int x0 = 0; x0 < f.width; x0 += rate.u)
            shade_block(f, x0, static_cast<int>(by) * rate.v, rate.u, rate.v, light, out);
    });
    return out;
}

TensorF shade_tiles(const GBufferFrame& f, const std::vector<ShadingRate>& rates, std::size_t w,
                    const DirectionalLight& light) {
    if (w == 0 || w % 4 != 0 || f.width % w != 0 || f.height % w != 0)
        throw std::invalid_argument("shade_tiles: tile size must be a multiple of 4 dividing the frame");
    const std::size_t tx = f.width / w, ty = f.height / w;
    if (rates.size() != tx * ty) throw std::invalid_argument("shade_tiles: rate map size mismatch");
    for (const auto& r : rates)
        if (!r.valid()) throw std::invalid_argument("shade_tiles: invalid rate " + r.label());
    TensorF out({3, static_cast<std::size_t>(f.height), static_cast<std::size_t>(f.width)}, nn::uninitialized);
    const int wi = static_cast<int>(w);
    parallel_for(ty, [&](std::size_t j) {
        for (std::size_t i = 0; i < tx; ++i) {
            const ShadingRate r = rates[j * tx + i];
            for (int y = 0; y < wi; y += r.v)
                for (int x = 0; x < wi; x += r.u)
                    shade_block(f, static_cast<int>(i) * wi + x, static_cast<int>(j) * wi + y, r.u, r.v,
                                light, out);
        }
    });
    return out;
}

Reprojection reproject(const GBufferFrame& prev, const TensorF& prev_image, const GBufferFrame& cur) {
    prev.camera.validate();
    cur.camera.validate();
    const std::size_t pw = static_cast<std::size_t>(prev.width), ph = static_cast<std::size_t>(prev.height);
    if (prev_image.rank() != 3 || prev_image.dim(0) != 3 || prev_image.dim(1) != ph || prev_image.dim(2) != pw)
        throw std::invalid_argument("reproject: previous image does not match its G-buffer");
    const std::size_t w = static_cast<std::size_t>(cur.width), h = static_cast<std::size_t>(cur.height);
    Reprojection r{TensorF({3, h, w}), TensorF({h, w})};
    const std::size_t plane = w * h, prev_plane = pw * ph;

    parallel_for(h, [&](std::size_t y) {
        for (std::size_t x = 0; x < w; ++x) {
            const int xi = static_cast<int>(x), yi = static_cast<int>(y);
            if (cur.sky(xi, yi)) continue;
            const std::size_t i = y * w + x;
            const Vec3 world(cur.position[i], cur.position[plane + i], cur.position[2 * plane + i]);
            const Vec3 view = prev.camera.to_view(world);
            if (!(view.z() > prev.camera.near && view.z() < prev.camera.far)) continue;
            const Eigen::Vector2d p = prev.camera.project(view, prev.width, prev.height);
            const double px = std::floor(p.x()), py = std::floor(p.y());
            if (px < 0.0 || py < 0.0 || px >= prev.width || py >= prev.height) continue;
            const int sx = static_cast<int>(px), sy = static_cast<int>(py);
            if (prev.sky(sx, sy)) continue;
            const double d = prev.depth[prev.index(sx, sy)];
            if (std::abs(d - view.z()) > kReprojectionDepthTolerance * view.z()) continue;
            const std::size_t s = prev.index(sx, sy);
            r.mask[i] = 1.f;
            for (int c = 0; c < 3; ++c) r.color[c * plane + i] = prev_image[c * prev_plane + s];
        }
    });
    return r;
}

}  // namespace percept::synthscene
