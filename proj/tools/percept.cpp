// Command-line front end: capture, train, evaluate, predict, vrs-demo.

#include <malloc.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <iostream>

#include "percept/core/binary_io.hpp"
#include "percept/harness/demo.hpp"
#include "percept/harness/heatmap.hpp"
#include "percept/harness/pipeline.hpp"
#include "percept/synthscene/capture.hpp"

using namespace percept;
namespace fs = std::filesystem;

namespace {

std::pair<int, int> parse_resolution(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw std::invalid_argument("resolution must look like 256x256");
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    // Tensors are large and short-lived; keep them out of mmap.
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);

    CLI::App app{"Perceptual error prediction for variable-rate shading"};
    app.require_subcommand(1);

    // capture
    auto* cap = app.add_subcommand("capture", "Render viewpoint pairs and write a training dataset");
    std::string scene = "mixed", res = "256x256", metric = "mald", rates = "1x2,2x1,2x4,4x2", out_dir;
    std::size_t count = 1000, w = 16;
    bool weber = false;
    double jnd_t = 0.25, jnd_l = 0.05;
    std::uint64_t seed = 1, scene_seed = 0;
    cap->add_option("--scene", scene, "diffuse|specular|checker|mixed")
        ->check(CLI::IsMember(synthscene::scene_names()));
    cap->add_option("--count", count, "Viewpoint pairs");
    cap->add_option("--res", res, "WxH");
    cap->add_option("--w", w, "Tile size");
    cap->add_option("--metric", metric)->check(CLI::IsMember({"rmse", "mald", "sflip"}));
    cap->add_flag("--weber", weber, "Weber-correct the metric");
    cap->add_option("--t", jnd_t, "JND sensitivity threshold");
    cap->add_option("--l", jnd_l, "Environment luminance");
    cap->add_option("--rates", rates, "Comma-separated rates");
    cap->add_option("--seed", seed);
    cap->add_option("--scene-seed", scene_seed, "0 selects the bundled layout");
    cap->add_option("--out", out_dir)->required();

    // train
    auto* tr = app.add_subcommand("train", "Train a predictor on a captured dataset");
    std::string data_dir, transform = "clamped", mu_mode = "precomputed", model_path, schedule = "formula";
    double k = 10.0, lr = 1e-4;
    std::size_t epochs = 200, batch = 16;
    bool quiet = false;
    tr->add_option("--data", data_dir)->required();
    tr->add_option("--transform", transform)->check(CLI::IsMember({"clamped", "logistic", "identity"}));
    tr->add_option("--k", k, "Logistic growth rate");
    tr->add_option("--mu-mode", mu_mode)->check(CLI::IsMember({"running", "precomputed"}));
    tr->add_option("--epochs", epochs);
    tr->add_option("--batch", batch);
    tr->add_option("--lr", lr);
    tr->add_option("--seed", seed);
    tr->add_option("--schedule", schedule, "Pooling schedule source")->check(CLI::IsMember({"formula", "published"}));
    tr->add_option("--out", model_path)->required();
    tr->add_flag("--quiet", quiet);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Score a model on a dataset");
    std::string report_path, subset = "auto";
    ev->add_option("--model", model_path)->required();
    ev->add_option("--data", data_dir)->required();
    ev->add_option("--report", report_path)->required();
    ev->add_option("--subset", subset, "auto|holdout|train|all")
        ->check(CLI::IsMember({"auto", "holdout", "train", "all"}));

    // predict
    auto* pr = app.add_subcommand("predict", "Write a heatmap of one sample's predictions");
    std::size_t sample = 0;
    std::string heatmap_path;
    pr->add_option("--model", model_path)->required();
    pr->add_option("--data", data_dir)->required();
    pr->add_option("--sample", sample)->required();
    pr->add_option("--out-heatmap", heatmap_path)->required();

    // vrs-demo
    auto* demo = app.add_subcommand("vrs-demo", "Choose shading rates with a model and compare to measured ones");
    harness::DemoConfig demo_cfg;
    demo->add_option("--model", model_path)->required();
    demo->add_option("--scene", demo_cfg.scene)->check(CLI::IsMember(synthscene::scene_names()));
    demo->add_option("--threshold", demo_cfg.threshold);
    demo->add_option("--frames", demo_cfg.frames);
    demo->add_option("--seed", demo_cfg.seed);
    demo->add_option("--out-dir", demo_cfg.out_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const auto t0 = std::chrono::steady_clock::now();
        if (*cap) {
            synthscene::CaptureConfig cfg;
            cfg.scene = scene;
            cfg.scene_seed = scene_seed;
            cfg.count = count;
            std::tie(cfg.width, cfg.height) = parse_resolution(res);
            cfg.w = w;
            cfg.metric = {metrics::parse_base_metric(metric), weber};
            cfg.jnd = {jnd_t, jnd_l};
            cfg.rates = parse_rate_list(rates);
            cfg.seed = seed;
            const auto m = synthscene::capture_dataset(cfg, out_dir);
            std::printf("captured %zu samples of '%s' (%s) into %s in %.1f s, mu_y=%.6g\n", cfg.count,
                        cfg.scene.c_str(), cfg.metric.label().c_str(), out_dir.c_str(), seconds_since(t0), m.mu_y);
        } else if (*tr) {
            const auto data = harness::load_dataset(data_dir);
            harness::TrainRequest req;
            req.transform.kind = transforms::parse_kind(transform);
            req.transform.k_logistic = k;
            req.transform.mu_mode = transforms::parse_mu_mode(mu_mode);
            req.schedule = net::parse_schedule_source(schedule);
            req.epochs = epochs;
            req.batch_size = batch;
            req.learning_rate = lr;
            req.seed = seed;
            if (!quiet)
                req.on_epoch = [&](const net::EpochStats& s) {
                    std::printf("epoch %zu/%zu  train %.6f  holdout %.6f  mu %.6g  (%.0f s)\n", s.epoch, epochs,
                                s.train_loss, s.holdout_loss, s.mu.empty() ? 0.0 : s.mu.front(), seconds_since(t0));
                    std::fflush(stdout);
                };
            const auto model = harness::train_model(data, req);
            net::save_model_file(model, model_path);
            std::printf("wrote %s (%zu bytes)\n", model_path.c_str(), static_cast<std::size_t>(fs::file_size(model_path)));
        } else if (*ev) {
            const auto model = net::load_model_file(model_path);
            const auto data = harness::load_dataset(data_dir);
            const auto which = subset == "holdout" ? harness::EvalSubset::holdout
                               : subset == "train" ? harness::EvalSubset::train
                               : subset == "all"   ? harness::EvalSubset::all
                                                   : harness::EvalSubset::automatic;
            const auto report = harness::evaluate(model, {&data}, which);
            write_text_file(report_path, report.to_text());
            std::printf("%s: R2 %.4f  MAE %.6f  MAE_under %.6f  sigma %.6f  (%s, %zu samples)\n", report_path.c_str(),
                        report.overall.r2, report.overall.mae.total, report.overall.mae.under,
                        report.overall.mae.sigma, report.subset.c_str(), report.overall.samples);
        } else if (*pr) {
            const auto model = net::load_model_file(model_path);
            const auto manifest = synthscene::read_manifest(data_dir);
            harness::check_compatible(model, manifest);
            if (sample >= manifest.config.count) throw std::invalid_argument("sample index out of range");
            const auto s = synthscene::read_sample(synthscene::sample_dir(data_dir, sample));
            const auto pred = harness::predict_sample(model, s.input);
            // Channels side by side, each tile drawn w x w.
            const std::size_t rc = pred.dim(0), th = pred.dim(1), tw = pred.dim(2);
            nn::TensorF strip({th, tw * rc}, 0.f);
            const auto rate_list = parse_rate_list(model.provenance.get("rates"));
            for (std::size_t c = 0; c < rc; ++c) {
                double pm = 0.0, tm = 0.0;
                for (std::size_t y = 0; y < th; ++y)
                    for (std::size_t x = 0; x < tw; ++x) {
                        const float v = pred[(c * th + y) * tw + x];
                        strip[y * tw * rc + c * tw + x] = v;
                        pm += v;
                        tm += s.target[(c * th + y) * tw + x];
                    }
                std::printf("%-4s predicted mean %.6f  measured mean %.6f\n", rate_list[c].label().c_str(),
                            pm / double(th * tw), tm / double(th * tw));
            }
            harness::heatmap_png(strip, heatmap_path, static_cast<int>(model.model.config.tile_size));
            std::printf("wrote %s\n", heatmap_path.c_str());
        } else if (*demo) {
            const auto model = net::load_model_file(model_path);
            const auto summary = harness::run_vrs_demo(model, demo_cfg);
            const auto& t = summary.total;
            std::printf("%zu frames: rate agreement %.3f (coarser %.3f, finer %.3f), tiles over threshold %.3f, "
                        "shading cost %.3f predicted vs %.3f measured\n",
                        summary.frames.size(), double(t.agree) / double(t.tiles), double(t.coarser) / double(t.tiles),
                        double(t.finer) / double(t.tiles), double(t.over_threshold) / double(t.tiles),
                        t.cost_predicted, t.cost_truth);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
