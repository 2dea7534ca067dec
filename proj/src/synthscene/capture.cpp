#include "percept/synthscene/capture.hpp"

#include <algorithm>
#include <stdexcept>

#include "percept/core/binary_io.hpp"
#include "percept/core/parallel.hpp"
#include "percept/core/pten.hpp"

namespace percept::synthscene {

namespace fs = std::filesystem;

void CaptureConfig::validate() const {
    if (count == 0) throw std::invalid_argument("capture: count must be >= 1");
    if (rates.empty()) throw std::invalid_argument("capture: rate list is empty");
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (!rates[i].valid()) throw std::invalid_argument("capture: invalid rate " + rates[i].label());
        for (std::size_t j = 0; j < i; ++j)
            if (rates[j] == rates[i]) throw std::invalid_argument("capture: duplicate rate " + rates[i].label());
    }
    if (width <= 0 || height <= 0 || width % 4 != 0 || height % 4 != 0)
        throw std::invalid_argument("capture: resolution must be a positive multiple of 4");
    if (w == 0 || width % static_cast<int>(w) != 0 || height % static_cast<int>(w) != 0)
        throw std::invalid_argument("capture: tile size must divide the resolution");
    jnd.validate();
}

RenderedPair render_pair(const Scene& scene, const Camera& prev, const Camera& cur, int width, int height) {
    RenderedPair f;
    f.prev = render_gbuffer(scene, prev, width, height);
    f.prev_image = shade(f.prev, {1, 1}, scene.light);
    f.cur = render_gbuffer(scene, cur, width, height);
    f.reprojection = reproject(f.prev, f.prev_image, f.cur);
    f.reference = shade(f.cur, {1, 1}, scene.light);
    return f;
}

TensorF assemble_input(const RenderedPair& f) {
    const auto h = static_cast<std::size_t>(f.cur.height), w = static_cast<std::size_t>(f.cur.width);
    const std::size_t plane = h * w;
    TensorF input({kInputChannels, h, w}, nn::uninitialized);
    auto in = input.data();
    const std::size_t c = kColorChannel;
    std::copy_n(f.reprojection.mask.raw(), plane, in.begin());
    std::copy_n(f.reprojection.color.raw() + c * plane, plane, in.begin() + plane);
    std::copy_n(f.cur.diffuse.raw() + c * plane, plane, in.begin() + 2 * plane);
    std::copy_n(f.cur.normal.raw() + 2 * plane, plane, in.begin() + 3 * plane);
    return input;
}

double unseen_fraction(const RenderedPair& f) {
    std::size_t geometry = 0, unseen = 0;
    for (int y = 0; y < f.cur.height; ++y)
        for (int x = 0; x < f.cur.width; ++x) {
            if (f.cur.sky(x, y)) continue;
            ++geometry;
            if (f.reprojection.mask[f.cur.index(x, y)] == 0.f) ++unseen;
        }
    return geometry ? static_cast<double>(unseen) / geometry : 0.0;
}

TensorF measure_rates(const RenderedPair& f, const std::vector<ShadingRate>& rates, std::size_t w,
                      const metrics::MetricId& metric, const metrics::JndConfig& jnd,
                      const DirectionalLight& light) {
    const std::size_t th = static_cast<std::size_t>(f.cur.height) / w, tw = static_cast<std::size_t>(f.cur.width) / w;
    TensorF target({rates.size(), th, tw}, nn::uninitialized);
    for (std::size_t r = 0; r < rates.size(); ++r) {
        const TensorF img = shade(f.cur, rates[r], light);
        const TensorF map = metrics::compute_metric(metric, f.reference, img, jnd);
        const TensorF tiles = metrics::tile_aggregate(map, w);
        std::copy(tiles.data().begin(), tiles.data().end(), target.raw() + r * th * tw);
    }
    return target;
}

CapturedSample render_sample(const Scene& scene, const CaptureConfig& cfg, const Camera& prev,
                             const Camera& cur) {
    const RenderedPair f = render_pair(scene, prev, cur, cfg.width, cfg.height);
    CapturedSample s;
    s.prev = prev;
    s.cur = cur;
    s.input = assemble_input(f);
    s.unseen = unseen_fraction(f);
    s.target = measure_rates(f, cfg.rates, cfg.w, cfg.metric, cfg.jnd, scene.light);
    return s;
}

CapturedSample capture_sample(const Scene& scene, const CaptureConfig& cfg, std::size_t index) {
    const std::uint64_t seed = derive_seed(cfg.seed, index);
    Rng rng(seed);
    const ViewpointPair pair = sample_viewpoint_pair(scene, rng, cfg.viewpoint);
    CapturedSample s = render_sample(scene, cfg, pair.prev, pair.cur);
    s.seed = seed;
    s.attempts = pair.attempts;
    return s;
}

fs::path sample_dir(const fs::path& root, std::size_t index) {
    char name[32];
    std::snprintf(name, sizeof name, "sample_%05zu", index);
    return root / name;
}

KeyValues camera_to_keyvalues(const Camera& c, const std::string& p) {
    KeyValues kv;
    auto vec = [](const Vec3& v) { return join_doubles({v.x(), v.y(), v.z()}); };
    kv.set(p + ".position", vec(c.position));
    kv.set(p + ".forward", vec(c.forward));
    kv.set(p + ".up", vec(c.up));
    kv.set(p + ".fov_y", c.fov_y);
    kv.set(p + ".near", c.near);
    kv.set(p + ".far", c.far);
    return kv;
}

Camera camera_from_keyvalues(const KeyValues& kv, const std::string& p) {
    auto vec = [&](const std::string& key) {
        const auto v = split_doubles(kv.get(key));
        if (v.size() != 3) throw FormatError("camera: " + key + " needs 3 components");
        return Vec3(v[0], v[1], v[2]);
    };
    Camera c;
    c.position = vec(p + ".position");
    c.forward = vec(p + ".forward");
    c.up = vec(p + ".up");
    c.fov_y = kv.get_double(p + ".fov_y");
    c.near = kv.get_double(p + ".near");
    c.far = kv.get_double(p + ".far");
    c.validate();
    return c;
}

void write_sample(const fs::path& dir, const CapturedSample& s, std::size_t index,
                  const metrics::MetricId& metric) {
    fs::create_directories(dir);
    save_pten(dir / "input.pten", s.input);
    save_pten(dir / "targets.pten", s.target);
    KeyValues kv;
    kv.set("index", static_cast<std::uint64_t>(index));
    kv.set("seed", s.seed);
    kv.set("metric", metric.label());
    kv.set("attempts", static_cast<std::uint64_t>(s.attempts));
    kv.set("unseen", s.unseen);
    for (const KeyValues& cam : {camera_to_keyvalues(s.prev, "prev"), camera_to_keyvalues(s.cur, "cur")})
        for (const auto& [k, v] : cam.entries()) kv.set(k, v);
    write_text_file(dir / "meta.txt", kv.to_string());
}

CapturedSample read_sample(const fs::path& dir) {
    CapturedSample s;
    s.input = load_pten(dir / "input.pten");
    s.target = load_pten(dir / "targets.pten");
    const KeyValues kv = KeyValues::parse(read_text_file(dir / "meta.txt"));
    s.seed = kv.get_uint("seed");
    s.attempts = kv.get_uint("attempts");
    s.unseen = kv.get_double("unseen");
    s.prev = camera_from_keyvalues(kv, "prev");
    s.cur = camera_from_keyvalues(kv, "cur");
    return s;
}

KeyValues DatasetManifest::to_keyvalues() const {
    KeyValues kv;
    kv.set("version", static_cast<std::uint64_t>(version));
    kv.set("scene", config.scene);
    kv.set("scene_seed", scene_seed);
    kv.set("seed", config.seed);
    kv.set("count", static_cast<std::uint64_t>(config.count));
    kv.set("width", static_cast<std::int64_t>(config.width));
    kv.set("height", static_cast<std::int64_t>(config.height));
    kv.set("w", static_cast<std::uint64_t>(config.w));
    kv.set("rates", rate_list_label(config.rates));
    kv.set("metric", config.metric.label());
    kv.set("jnd.t", config.jnd.t);
    kv.set("jnd.l", config.jnd.l);
    kv.set("channels", kChannelOrder);
    kv.set("viewpoint.min_coverage", config.viewpoint.min_coverage);
    kv.set("viewpoint.max_distance_frac", config.viewpoint.max_distance_frac);
    kv.set("viewpoint.jitter", config.viewpoint.jitter);
    kv.set("mu_y", mu_y);
    kv.set("mu_y.per_rate", join_doubles(rate_means));
    return kv;
}

DatasetManifest DatasetManifest::from_keyvalues(const KeyValues& kv) {
    DatasetManifest m;
    m.version = static_cast<std::uint32_t>(kv.get_uint("version"));
    if (m.version != kDatasetVersion)
        throw FormatError("dataset: unsupported version " + std::to_string(m.version));
    if (kv.get("channels") != kChannelOrder) throw FormatError("dataset: unexpected channel order");
    auto& c = m.config;
    c.scene = kv.get("scene");
    m.scene_seed = kv.get_uint("scene_seed");
    c.scene_seed = m.scene_seed;
    c.seed = kv.get_uint("seed");
    c.count = kv.get_uint("count");
    c.width = static_cast<int>(kv.get_int("width"));
    c.height = static_cast<int>(kv.get_int("height"));
    c.w = kv.get_uint("w");
    c.rates = parse_rate_list(kv.get("rates"));
    c.metric = metrics::parse_metric_id(kv.get("metric"));
    c.jnd.t = kv.get_double("jnd.t");
    c.jnd.l = kv.get_double("jnd.l");
    c.viewpoint.min_coverage = kv.get_double("viewpoint.min_coverage");
    c.viewpoint.max_distance_frac = kv.get_double("viewpoint.max_distance_frac");
    c.viewpoint.jitter = kv.get_double("viewpoint.jitter");
    m.mu_y = kv.get_double("mu_y");
    m.rate_means = split_doubles(kv.get("mu_y.per_rate"));
    c.validate();
    return m;
}

DatasetManifest read_manifest(const fs::path& dir) {
    return DatasetManifest::from_keyvalues(KeyValues::parse(read_text_file(dir / "manifest.txt")));
}

DatasetManifest capture_dataset(const CaptureConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const Scene scene = make_scene(cfg.scene, cfg.scene_seed);
    fs::create_directories(out_dir);

    // Per-sample, per-rate sums, reduced in index order afterwards.
    const std::size_t rates = cfg.rates.size();
    std::vector<double> sums(cfg.count * rates, 0.0);
    const std::size_t tiles = (static_cast<std::size_t>(cfg.height) / cfg.w) * (static_cast<std::size_t>(cfg.width) / cfg.w);
    parallel_for(cfg.count, [&](std::size_t i) {
        const CapturedSample s = capture_sample(scene, cfg, i);
        for (std::size_t r = 0; r < rates; ++r) {
            double acc = 0.0;
            for (std::size_t k = 0; k < tiles; ++k) acc += s.target[r * tiles + k];
            sums[i * rates + r] = acc;
        }
        write_sample(sample_dir(out_dir, i), s, i, cfg.metric);
    });

    DatasetManifest m;
    m.config = cfg;
    m.scene_seed = scene.seed;
    m.config.scene_seed = scene.seed;
    m.rate_means.assign(rates, 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < rates; ++r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < cfg.count; ++i) acc += sums[i * rates + r];
        m.rate_means[r] = acc / static_cast<double>(cfg.count * tiles);
        total += acc;
    }
    m.mu_y = total / static_cast<double>(cfg.count * tiles * rates);
    write_text_file(out_dir / "manifest.txt", m.to_keyvalues().to_string());
    return m;
}

}  // namespace percept::synthscene
