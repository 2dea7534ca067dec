#include "percept/harness/demo.hpp"

#include <cstdio>

#include "percept/core/binary_io.hpp"
#include "percept/core/keyvalue.hpp"
#include "percept/harness/heatmap.hpp"
#include "percept/harness/pipeline.hpp"
#include "percept/synthscene/capture.hpp"

namespace percept::harness {

namespace fs = std::filesystem;
using synthscene::RenderedPair;

namespace {

/// The six reduced rates, in cost order.
std::vector<ShadingRate> reduced_rates() {
    std::vector<ShadingRate> r;
    for (ShadingRate rate : kRatesByCost)
        if (rate != ShadingRate{1, 1}) r.push_back(rate);
    return r;
}

std::vector<double> plane_values(const nn::TensorF& t, std::size_t c) {
    const std::size_t n = t.dim(1) * t.dim(2);
    return std::vector<double>(t.raw() + c * n, t.raw() + (c + 1) * n);
}

std::vector<double> tile_luminance(const nn::TensorF& rgb, std::size_t w) {
    const nn::TensorF lum = metrics::luminance(rgb);
    const nn::TensorF tiles = metrics::tile_aggregate(lum, w);
    return std::vector<double>(tiles.data().begin(), tiles.data().end());
}

void accumulate(DemoFrame& total, const DemoFrame& f) {
    total.tiles += f.tiles;
    total.agree += f.agree;
    total.coarser += f.coarser;
    total.finer += f.finer;
    total.over_threshold += f.over_threshold;
    total.cost_predicted += f.cost_predicted;
    total.cost_truth += f.cost_truth;
    total.vrs_error += f.vrs_error;
}

void put(KeyValues& kv, const std::string& p, const DemoFrame& f) {
    const double tiles = static_cast<double>(f.tiles);
    kv.set(p + ".tiles", static_cast<std::uint64_t>(f.tiles));
    kv.set(p + ".agreement", static_cast<double>(f.agree) / tiles);
    kv.set(p + ".coarser_than_truth", static_cast<double>(f.coarser) / tiles);
    kv.set(p + ".finer_than_truth", static_cast<double>(f.finer) / tiles);
    kv.set(p + ".over_threshold", static_cast<double>(f.over_threshold) / tiles);
    kv.set(p + ".cost_predicted", f.cost_predicted);
    kv.set(p + ".cost_truth", f.cost_truth);
    kv.set(p + ".vrs_error", f.vrs_error);
}

}  // namespace

std::string DemoSummary::to_text() const {
    KeyValues kv;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03zu", i);
        put(kv, name, frames[i]);
    }
    put(kv, "total", total);
    return kv.to_string();
}

DemoSummary run_vrs_demo(const net::ModelFile& model, const DemoConfig& cfg) {
    const synthscene::Scene scene = synthscene::make_scene(cfg.scene);
    const auto metric = metrics::parse_metric_id(model.provenance.get("metric"));
    metrics::JndConfig jnd;
    jnd.t = cfg.threshold;
    jnd.l = model.provenance.has("jnd.l") ? model.provenance.get_double("jnd.l") : jnd.l;
    jnd.validate();
    vrs::ExtrapolationConfig ext;
    ext.predicted = parse_rate_list(model.provenance.get("rates"));
    const std::size_t w = model.model.config.tile_size;
    const auto all_rates = reduced_rates();
    fs::create_directories(cfg.out_dir);

    DemoSummary summary;
    for (std::size_t f = 0; f < cfg.frames; ++f) {
        Rng rng(derive_seed(cfg.seed, f));
        const auto pair = synthscene::sample_viewpoint_pair(scene, rng);
        const RenderedPair frames = synthscene::render_pair(scene, pair.prev, pair.cur, cfg.width, cfg.height);

        const nn::TensorF pred = predict_sample(model, synthscene::assemble_input(frames));
        std::vector<std::vector<double>> channels;
        for (std::size_t c = 0; c < ext.predicted.size(); ++c) channels.push_back(plane_values(pred, c));
        const std::size_t tx = pred.dim(2), ty = pred.dim(1);
        const vrs::TilePrediction predicted = vrs::extrapolate_rates(channels, tx, ty, ext);

        // Runtime only has the reprojected previous frame for luminance.
        const auto thresholds = vrs::threshold_for(metric, jnd, tile_luminance(frames.reprojection.color, w));
        const vrs::RateDecisionMap chosen = vrs::choose_mode(predicted, thresholds, w);

        const nn::TensorF measured = synthscene::measure_rates(frames, all_rates, w, metric, jnd, scene.light);
        vrs::TilePrediction truth;
        truth.tiles_x = tx;
        truth.tiles_y = ty;
        truth.of({1, 1}).assign(tx * ty, 0.0);
        for (std::size_t r = 0; r < all_rates.size(); ++r) truth.of(all_rates[r]) = plane_values(measured, r);
        const vrs::RateDecisionMap ideal = vrs::choose_mode(truth, thresholds, w);

        const nn::TensorF vrs_image = synthscene::shade_tiles(frames.cur, chosen.rates, w, scene.light);
        const nn::TensorF err = metrics::compute_metric(metric, frames.reference, vrs_image, jnd);
        const nn::TensorF err_tiles = metrics::tile_aggregate(err, w);

        DemoFrame s;
        s.tiles = tx * ty;
        for (std::size_t t = 0; t < s.tiles; ++t) {
            const int a = cost_rank(chosen.rates[t]), b = cost_rank(ideal.rates[t]);
            s.agree += a == b;
            s.coarser += a < b;
            s.finer += a > b;
            s.over_threshold += err_tiles[t] >= thresholds[t];
            s.cost_predicted += 1.0 / chosen.rates[t].coverage();
            s.cost_truth += 1.0 / ideal.rates[t].coverage();
        }
        s.cost_predicted /= static_cast<double>(s.tiles);
        s.cost_truth /= static_cast<double>(s.tiles);
        double e = 0.0;
        for (float v : err.data()) e += v;
        s.vrs_error = e / static_cast<double>(err.size());

        char prefix[32];
        std::snprintf(prefix, sizeof prefix, "frame_%03zu_", f);
        const std::string p = prefix;
        write_png(cfg.out_dir / (p + "reference.png"), to_rgb8(frames.reference));
        write_png(cfg.out_dir / (p + "vrs.png"), to_rgb8(vrs_image));
        write_png(cfg.out_dir / (p + "rates.png"), vrs::render_rate_map(chosen));
        write_png(cfg.out_dir / (p + "rates_truth.png"), vrs::render_rate_map(ideal));
        write_text_file(cfg.out_dir / (p + "rates.txt"), vrs::rate_map_text(chosen));
        write_text_file(cfg.out_dir / (p + "rates_truth.txt"), vrs::rate_map_text(ideal));
        summary.frames.push_back(s);
        accumulate(summary.total, s);
    }
    if (!summary.frames.empty()) {
        const double n = static_cast<double>(summary.frames.size());
        summary.total.cost_predicted /= n;
        summary.total.cost_truth /= n;
        summary.total.vrs_error /= n;
    }
    write_text_file(cfg.out_dir / "summary.txt", summary.to_text());
    return summary;
}

}  // namespace percept::harness
