#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "percept/core/binary_io.hpp"
#include "percept/core/pten.hpp"
#include "percept/core/random.hpp"
#include "percept/synthscene/capture.hpp"
#include "percept/synthscene/render.hpp"
#include "percept/synthscene/viewpoint.hpp"
#include "support/tempdir.hpp"

using namespace percept;
using namespace percept::synthscene;
using percept::testing::TempDir;

namespace {

Scene blank_scene() {
    Scene s;
    s.name = "test";
    s.materials.push_back(Material{});
    s.camera_region = {Vec3(-50, -50, -50), Vec3(50, 50, 50)};
    return s;
}

float plane(const TensorF& t, std::size_t c, const GBufferFrame& f, int x, int y) {
    return t[c * std::size_t(f.width) * f.height + f.index(x, y)];
}

Vec3 world_pos(const GBufferFrame& f, int x, int y) {
    return Vec3(plane(f.position, 0, f, x, y), plane(f.position, 1, f, x, y), plane(f.position, 2, f, x, y));
}

/// Is world point p the first surface seen from camera c (ignoring pixel snapping)?
bool visible_from(const Scene& s, const Camera& c, const Vec3& p, int w, int h) {
    const Vec3 v = c.to_view(p);
    if (v.z() <= c.near) return false;
    const auto px = c.project(v, w, h);
    if (px.x() < 0 || px.y() < 0 || px.x() >= w || px.y() >= h) return false;
    const Vec3 d = p - c.position;
    const double dist = d.norm();
    return !s.occluded(Ray{c.position, d / dist}, 1e-6, dist * (1 - 1e-4));
}

/// Nearest-pixel lookups may disagree with the continuous visibility oracle
/// only where the previous frame has a depth edge next to the projected point.
bool near_silhouette(const GBufferFrame& prev, const Camera& c, const Vec3& p) {
    const auto q = c.project(c.to_view(p), prev.width, prev.height);
    const int qx = int(std::floor(q.x())), qy = int(std::floor(q.y()));
    float lo = std::numeric_limits<float>::max(), hi = 0;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const int x = qx + dx, y = qy + dy;
            if (x < 0 || y < 0 || x >= prev.width || y >= prev.height) return true;
            lo = std::min(lo, prev.depth[prev.index(x, y)]);
            hi = std::max(hi, prev.depth[prev.index(x, y)]);
        }
    return hi > lo * (1 + kReprojectionDepthTolerance);
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("camera basis and projection round trip") {
    const auto c = Camera::look_along(Vec3(1, 2, 3), Vec3(1, -0.3, 0.5));
    CHECK_NOTHROW(c.validate());
    CHECK(c.right().dot(c.forward) == doctest::Approx(0.0).scale(1));
    CHECK(c.up.dot(c.forward) == doctest::Approx(0.0).scale(1));
    CHECK_THROWS(Camera::look_along(Vec3::Zero(), Vec3::UnitY()));
    for (double x : {0.5, 10.5, 63.5})
        for (double y : {0.5, 40.5}) {
            const Ray r = c.pixel_ray(x, y, 64, 48);
            const auto p = c.project(c.to_view(r.origin + 7.0 * r.dir), 64, 48);
            CHECK(p.x() == doctest::Approx(x + 0.5));
            CHECK(p.y() == doctest::Approx(y + 0.5));
        }
}

TEST_CASE("gbuffer: sphere centre normal faces the camera") {
    Scene s = blank_scene();
    s.spheres.push_back({Vec3(0, 0, 5), 1.0, 0});
    const auto cam = Camera::look_along(Vec3::Zero(), Vec3::UnitZ());
    const auto f = render_gbuffer(s, cam, 65, 65);
    CHECK_FALSE(f.sky(32, 32));
    CHECK(plane(f.normal, 0, f, 32, 32) == doctest::Approx(0.0).scale(1));
    CHECK(plane(f.normal, 1, f, 32, 32) == doctest::Approx(0.0).scale(1));
    CHECK(plane(f.normal, 2, f, 32, 32) == doctest::Approx(-1.0));
    CHECK(f.depth[f.index(32, 32)] == doctest::Approx(4.0));
    CHECK(f.sky(0, 0));
    CHECK(f.depth[f.index(0, 0)] == float(cam.far));
    CHECK(plane(f.diffuse, 0, f, 0, 0) == 0.f);
    for (int y = 0; y < 65; ++y)
        for (int x = 0; x < 65; ++x)
            if (!f.sky(x, y)) {
                const double n = std::hypot(plane(f.normal, 0, f, x, y), plane(f.normal, 1, f, x, y),
                                            plane(f.normal, 2, f, x, y));
                REQUIRE(n == doctest::Approx(1.0).epsilon(1e-5));
            }
}

TEST_CASE("gbuffer: ground depth matches closed-form ray-plane distance") {
    Scene s = blank_scene();
    s.ground = Ground{50.0, 0};
    const auto cam = Camera::look_along(Vec3(0.3, 2.0, -1.0), Vec3(0.2, -0.5, 1.0));
    const int W = 48, H = 32;
    const auto f = render_gbuffer(s, cam, W, H);
    int geometry = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const Ray r = cam.pixel_ray(x, y, W, H);
            const double t = r.dir.y() < 0 ? -r.origin.y() / r.dir.y() : -1;
            const Vec3 p = r.origin + t * r.dir;
            const bool hit = t > 0 && std::abs(p.x()) <= 50 && std::abs(p.z()) <= 50 &&
                             (p - cam.position).dot(cam.forward) < cam.far;
            REQUIRE(f.sky(x, y) == !hit);
            if (!hit) continue;
            ++geometry;
            REQUIRE(f.depth[f.index(x, y)] == doctest::Approx((p - cam.position).dot(cam.forward)).epsilon(1e-6));
        }
    CHECK(geometry > W * H / 3);
}

TEST_CASE("coverage: sky-facing camera fails the validity bar") {
    const Scene s = make_scene("mixed");
    const auto up = Camera::look_along(Vec3(0, 40, 0), Vec3(0.01, 1, 0));
    CHECK(probe_coverage(s, up) == 0.0);
    CHECK_FALSE(valid_viewpoint(s, up, ViewpointConfig{}));
}

TEST_CASE("shading: rate identities") {
    const Scene s = make_scene("mixed");
    Rng rng(51);
    const auto pair = sample_viewpoint_pair(s, rng);
    const auto f = render_gbuffer(s, pair.cur, 64, 64);
    const auto full = shade(f, {1, 1}, s.light);
    const std::size_t np = 64 * 64;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const std::size_t i = f.index(x, y);
            if (f.sky(x, y)) {
                for (int c = 0; c < 3; ++c) REQUIRE(full[c * np + i] == kSkyColor[c]);
                continue;
            }
            const auto px = shade_pixel(f, x, y, s.light);
            for (int c = 0; c < 3; ++c) REQUIRE(full[c * np + i] == px[c]);
        }
    const auto r22 = shade(f, {2, 2}, s.light);
    for (int y = 0; y < 64; y += 2)
        for (int x = 0; x < 64; x += 2)
            for (int c = 0; c < 3; ++c) {
                // Sky pixels keep the background colour, so compare geometry only.
                const float ref = r22[c * np + f.index(x, y)];
                for (int d = 1; d < 4; ++d) {
                    const int xx = x + d % 2, yy = y + d / 2;
                    if (!f.sky(x, y) && !f.sky(xx, yy)) REQUIRE(r22[c * np + f.index(xx, yy)] == ref);
                }
            }
    CHECK_THROWS(shade(render_gbuffer(s, pair.cur, 30, 30), {4, 4}, s.light));
}

TEST_CASE("shading: constant G-buffer region is rate invariant") {
    Scene s = blank_scene();
    s.ground = Ground{50.0, 0};
    s.light.direction = Vec3(0.2, 1, 0.1).normalized();
    const auto cam = Camera::look_along(Vec3(0, 3, 0), Vec3(0.001, -1, 0.3), Vec3::UnitY());
    const auto f = render_gbuffer(s, cam, 32, 32);
    REQUIRE(f.coverage() == 1.0);
    const auto ref = shade(f, {1, 1}, s.light);
    for (const auto& r : kRatesByCost) {
        const auto img = shade(f, r, s.light);
        for (std::size_t i = 0; i < img.size(); ++i) REQUIRE(img[i] == ref[i]);
    }
}

TEST_CASE("reprojection: static camera reproduces the previous frame") {
    const Scene s = make_scene("checker");
    Rng rng(52);
    const auto pair = sample_viewpoint_pair(s, rng);
    const auto frames = render_pair(s, pair.cur, pair.cur, 64, 64);
    const auto& rp = frames.reprojection;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const std::size_t i = frames.cur.index(x, y);
            REQUIRE(rp.mask[i] == (frames.cur.sky(x, y) ? 0.f : 1.f));
            if (!frames.cur.sky(x, y))
                for (int c = 0; c < 3; ++c) REQUIRE(rp.color[c * 4096 + i] == frames.prev_image[c * 4096 + i]);
        }
    CHECK(unseen_fraction(frames) == 0.0);
}

TEST_CASE("reprojection: disocclusion behind a moving occluder") {
    Scene s = blank_scene();
    s.boxes.push_back({Vec3(-6, -4, 10), Vec3(6, 4, 10.5), 0});  // back wall
    s.spheres.push_back({Vec3(0, 0, 4), 1.0, 0});                  // occluder
    const int W = 64, H = 64;
    const auto prev = Camera::look_along(Vec3(0, 0, 0), Vec3::UnitZ());
    const auto cur = Camera::look_along(Vec3(3, 0, 0), Vec3::UnitZ());
    const auto frames = render_pair(s, prev, cur, W, H);
    int newly = 0, disagree = 0, geometry = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (frames.cur.sky(x, y)) {
                REQUIRE(frames.reprojection.mask[frames.cur.index(x, y)] == 0.f);
                continue;
            }
            ++geometry;
            const bool seen = visible_from(s, prev, world_pos(frames.cur, x, y), W, H);
            newly += !seen;
            const bool m = frames.reprojection.mask[frames.cur.index(x, y)] == 1.f;
            if (seen != m) {
                ++disagree;
                REQUIRE(near_silhouette(frames.prev, prev, world_pos(frames.cur, x, y)));
            }
        }
    CHECK(newly > geometry / 50);
    CHECK(disagree <= geometry / 20);

    // The wall point hidden behind the sphere in the previous view.
    const Vec3 hidden(0, 0, 10);
    const auto px = cur.project(cur.to_view(hidden), W, H);
    const int hx = int(px.x()), hy = int(px.y());
    REQUIRE_FALSE(visible_from(s, prev, world_pos(frames.cur, hx, hy), W, H));
    CHECK(frames.reprojection.mask[frames.cur.index(hx, hy)] == 0.f);
    CHECK(frames.reprojection.color[frames.cur.index(hx, hy)] == 0.f);
}

TEST_CASE("reprojection: two-sphere occlusion gives a depth mismatch") {
    Scene s = blank_scene();
    s.spheres.push_back({Vec3(0, 0, 8), 2.0, 0});    // target
    s.spheres.push_back({Vec3(0, 0, 2.5), 0.6, 0});  // near occluder, previous view only
    const auto prev = Camera::look_along(Vec3(0, 0, 0), Vec3::UnitZ());
    const auto cur = Camera::look_along(Vec3(0, 2.2, 0), Vec3(0, -0.27, 1));
    const auto frames = render_pair(s, prev, cur, 64, 64);
    const Vec3 front(0, 0, 6);  // nearest point of the target, hidden in prev
    const auto px = cur.project(cur.to_view(front), 64, 64);
    const int x = int(px.x()), y = int(px.y());
    REQUIRE((world_pos(frames.cur, x, y) - front).norm() < 0.3);
    CHECK(frames.reprojection.mask[frames.cur.index(x, y)] == 0.f);
}

TEST_CASE("reprojection soundness on sampled pairs") {
    for (const auto& name : scene_names()) {
        const Scene s = make_scene(name);
        Rng rng(53);
        for (int k = 0; k < 3; ++k) {
            const auto pair = sample_viewpoint_pair(s, rng);
            const int W = 96, H = 96;
            const auto frames = render_pair(s, pair.prev, pair.cur, W, H);
            const double px_angle = 2 * std::tan(pair.cur.fov_y / 2) / H;
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    if (frames.reprojection.mask[frames.cur.index(x, y)] != 1.f) continue;
                    const Vec3 p = world_pos(frames.cur, x, y);
                    const auto q = pair.prev.project(pair.prev.to_view(p), W, H);
                    const int qx = int(std::floor(q.x())), qy = int(std::floor(q.y()));
                    const Vec3 pp = world_pos(frames.prev, qx, qy);
                    const double depth = frames.cur.depth[frames.cur.index(x, y)];
                    // Depth test slack plus one pixel footprint at a grazing angle.
                    const double eps_w = kReprojectionDepthTolerance * depth * 2 + 4 * px_angle * depth;
                    REQUIRE((pp - p).norm() <= eps_w);
                }
        }
    }
}

TEST_CASE("viewpoint sampler: predicates, determinism, exhaustion") {
    const Scene s = make_scene("diffuse");
    ViewpointConfig cfg;
    Rng a(54), b(54);
    for (int i = 0; i < 5; ++i) {
        const auto p = sample_viewpoint_pair(s, a, cfg);
        const auto q = sample_viewpoint_pair(s, b, cfg);
        CHECK(valid_pair(s, p, cfg));
        CHECK(p.cur.position == q.cur.position);
        CHECK(p.prev.forward == q.prev.forward);
        CHECK(p.attempts == q.attempts);
        CHECK((p.cur.position - p.prev.position).norm() <= cfg.max_distance(s));
        CHECK(path_clear(s, p.prev.position, p.cur.position));
    }
    Scene far = s;
    far.camera_region = {Vec3(500, 500, 500), Vec3(600, 600, 600)};
    cfg.max_attempts = 300;
    Rng c(55);
    CHECK_THROWS_AS(sample_viewpoint_pair(far, c, cfg), SamplerExhausted);
}

TEST_CASE("scene library: materials and primitives are valid") {
    for (const auto& name : scene_names()) {
        const Scene s = make_scene(name);
        CHECK_NOTHROW(s.validate());
        Rng rng(56);
        for (int i = 0; i < 200; ++i) {
            const Vec3 p(rng.uniform(-10, 10), rng.uniform(0, 4), rng.uniform(-10, 10));
            for (std::size_t m = 0; m < s.materials.size(); ++m) {
                const Vec3 a = s.albedo(int(m), p, Vec3::UnitY());
                REQUIRE((a.array() >= 0).all());
                REQUIRE((a.array() <= 1).all());
            }
        }
        CHECK(make_scene(name).spheres.front().center == s.spheres.front().center);
    }
    CHECK_THROWS(make_scene("nope"));
}

TEST_CASE("pten: round trip and corruption") {
    Rng rng(57);
    nn::TensorF t({2, 3, 5});
    for (float& v : t.data()) v = float(rng.normal());
    const auto bytes = encode_pten(t);
    CHECK(bytes.size() == 4 + 2 + 1 + 1 + 3 * 4 + t.size() * 4);
    const auto back = decode_pten(bytes);
    CHECK(back.same_shape(t));
    CHECK(std::equal(t.data().begin(), t.data().end(), back.data().begin()));
    CHECK_THROWS_AS(decode_pten(std::span(bytes).first(bytes.size() - 1)), FormatError);
    auto bad = bytes;
    bad[7] = 7;  // rank
    CHECK_THROWS_AS(decode_pten(bad), FormatError);
    TempDir dir("pten");
    save_pten(dir / "t.pten", t);
    CHECK(slurp(dir / "t.pten") == bytes);
}

TEST_CASE("capture: identity rate has zero targets, stored targets recompute exactly") {
    const Scene s = make_scene("specular");
    CaptureConfig cfg;
    cfg.scene = "specular";
    cfg.width = cfg.height = 64;
    cfg.count = 3;
    cfg.seed = 77;
    cfg.rates = {{1, 1}, {2, 2}, {4, 4}};
    const auto sample = capture_sample(s, cfg, 0);
    REQUIRE(sample.target.dim(0) == 3);
    for (std::size_t i = 0; i < 16; ++i) CHECK(sample.target[i] == 0.f);
    CHECK(sample.input.dim(0) == kInputChannels);
    for (std::size_t i = 0; i < 4096; ++i) REQUIRE((sample.input[i] == 0.f || sample.input[i] == 1.f));

    cfg.rates = kPredictedRates;
    TempDir dir("capture");
    const auto manifest = capture_dataset(cfg, dir.path());
    CHECK(manifest.rate_means.size() == 4);
    const auto m2 = read_manifest(dir.path());
    CHECK(m2.mu_y == manifest.mu_y);
    CHECK(m2.config.rates == cfg.rates);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto stored = read_sample(sample_dir(dir.path(), i));
        const auto again = render_sample(s, cfg, stored.prev, stored.cur);
        REQUIRE(again.target.same_shape(stored.target));
        for (std::size_t k = 0; k < again.target.size(); ++k) REQUIRE(again.target[k] == stored.target[k]);
        for (std::size_t k = 0; k < again.input.size(); ++k) REQUIRE(again.input[k] == stored.input[k]);
    }
}

TEST_CASE("capture: dataset bytes are determined by the seeds") {
    CaptureConfig cfg;
    cfg.scene = "checker";
    cfg.width = cfg.height = 32;
    cfg.count = 4;
    cfg.seed = 5;
    TempDir a("det_a"), b("det_b");
    capture_dataset(cfg, a.path());
    capture_dataset(cfg, b.path());
    std::size_t files = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
        if (!e.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(e.path(), a.path());
        REQUIRE(slurp(e.path()) == slurp(b.path() / rel));
        ++files;
    }
    CHECK(files >= 1 + 4 * 2);
    cfg.seed = 6;
    TempDir c("det_c");
    capture_dataset(cfg, c.path());
    CHECK(slurp(sample_dir(a.path(), 0) / "targets.pten") != slurp(sample_dir(c.path(), 0) / "targets.pten"));
}
