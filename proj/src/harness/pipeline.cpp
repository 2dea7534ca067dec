#include "percept/harness/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "percept/core/binary_io.hpp"
#include "percept/core/pten.hpp"

namespace percept::harness {

namespace fs = std::filesystem;

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

LoadedDataset load_dataset(const fs::path& dir) {
    LoadedDataset d;
    d.dir = dir;
    const std::string manifest_text = read_text_file(dir / "manifest.txt");
    d.manifest = synthscene::DatasetManifest::from_keyvalues(KeyValues::parse(manifest_text));
    std::uint32_t crc = crc32_of(std::span(reinterpret_cast<const std::uint8_t*>(manifest_text.data()),
                                           manifest_text.size()));
    const auto& cfg = d.manifest.config;
    d.samples.resize(cfg.count);
    for (std::size_t i = 0; i < cfg.count; ++i) {
        const fs::path sd = synthscene::sample_dir(dir, i);
        for (const char* name : {"input.pten", "targets.pten"}) {
            const auto bytes = read_file(sd / name);
            crc = crc32_update(crc, bytes);
            nn::TensorF t;
            try {
                t = decode_pten(bytes);
            } catch (const FormatError& e) {
                throw FormatError((sd / name).string() + ": " + e.what());
            }
            (name[0] == 'i' ? d.samples[i].input : d.samples[i].target) = std::move(t);
        }
        const auto& in = d.samples[i].input;
        const auto& tg = d.samples[i].target;
        const std::size_t h = static_cast<std::size_t>(cfg.height), w = static_cast<std::size_t>(cfg.width);
        if (in.rank() != 3 || in.dim(0) != synthscene::kInputChannels || in.dim(1) != h || in.dim(2) != w ||
            tg.rank() != 3 || tg.dim(0) != cfg.rates.size() || tg.dim(1) != h / cfg.w || tg.dim(2) != w / cfg.w)
            throw FormatError(sd.string() + ": tensor shapes disagree with the manifest");
    }
    d.fingerprint = crc;
    return d;
}

net::ModelFile train_model(const LoadedDataset& data, const TrainRequest& req) {
    const auto& cfg = data.manifest.config;
    const auto config = net::NetworkConfig::make(cfg.w, req.schedule, synthscene::kInputChannels, cfg.rates.size());
    net::ModelFile file;
    file.model = net::build_network(config, derive_seed(req.seed, 1));
    const net::HoldoutSplit split = net::split_holdout(data.samples.size(), req.seed);

    net::TrainOptions opt;
    opt.epochs = req.epochs;
    opt.batch_size = req.batch_size;
    opt.seed = req.seed;
    opt.optimizer.learning_rate = req.learning_rate;
    opt.on_epoch = req.on_epoch;
    const net::TrainResult result =
        net::train(file.model, data.samples, split.train, split.holdout, req.transform, opt);
    file.transform = result.transform;

    KeyValues& p = file.provenance;
    p.set("metric", cfg.metric.label());
    p.set("rates", rate_list_label(cfg.rates));
    p.set("scene", cfg.scene);
    p.set("dataset.fingerprint", hex32(data.fingerprint));
    p.set("dataset.count", static_cast<std::uint64_t>(data.samples.size()));
    p.set("dataset.mu_y", data.manifest.mu_y);
    p.set("jnd.t", cfg.jnd.t);
    p.set("jnd.l", cfg.jnd.l);
    std::vector<std::uint64_t> held(split.holdout.begin(), split.holdout.end());
    p.set("holdout", join_uints(held));
    p.set("train.seed", req.seed);
    p.set("train.epochs", static_cast<std::uint64_t>(req.epochs));
    p.set("train.batch", static_cast<std::uint64_t>(req.batch_size));
    p.set("train.lr", req.learning_rate);
    if (!result.history.empty()) {
        p.set("train.final_loss", result.history.back().train_loss);
        p.set("train.final_holdout_loss", result.history.back().holdout_loss);
    }
    return file;
}

void check_compatible(const net::ModelFile& model, const synthscene::DatasetManifest& manifest) {
    const auto& cfg = manifest.config;
    const std::string metric = model.provenance.get_or("metric", "");
    if (metric != cfg.metric.label())
        throw std::invalid_argument("model was trained on metric '" + metric + "' but the dataset holds '" +
                                    cfg.metric.label() + "'");
    if (model.provenance.get_or("rates", "") != rate_list_label(cfg.rates))
        throw std::invalid_argument("model rates " + model.provenance.get_or("rates", "?") +
                                    " differ from dataset rates " + rate_list_label(cfg.rates));
    if (model.model.config.tile_size != cfg.w)
        throw std::invalid_argument("model tile size differs from the dataset's w");
}

std::vector<std::size_t> select_samples(const net::ModelFile& model, const LoadedDataset& data, EvalSubset subset) {
    const bool same = model.provenance.get_or("dataset.fingerprint", "") == hex32(data.fingerprint);
    if (subset == EvalSubset::automatic) subset = same ? EvalSubset::holdout : EvalSubset::all;
    std::vector<std::size_t> all(data.samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    if (subset == EvalSubset::all) return all;
    if (!same) throw std::invalid_argument("holdout/train subsets need the model's training dataset");
    std::vector<std::size_t> held;
    for (auto v : split_uints(model.provenance.get("holdout"))) held.push_back(static_cast<std::size_t>(v));
    if (subset == EvalSubset::holdout) return held;
    std::vector<std::size_t> train;
    std::set_difference(all.begin(), all.end(), held.begin(), held.end(), std::back_inserter(train));
    return train;
}

nn::TensorF predict_sample(const net::ModelFile& model, const nn::TensorF& input) {
    if (input.rank() != 3) throw std::invalid_argument("predict_sample: expected a (C, H, W) input");
    nn::TensorF batch({1, input.dim(0), input.dim(1), input.dim(2)}, nn::uninitialized);
    std::copy(input.data().begin(), input.data().end(), batch.raw());
    const auto pred = net::predict_tiles(model.model, batch, model.transform);
    nn::TensorF out({pred.raw.channels(), pred.raw.height(), pred.raw.width()}, nn::uninitialized);
    std::copy(pred.raw.data().begin(), pred.raw.data().end(), out.raw());
    return out;
}

namespace {

// R^2 is undefined for constant targets; reported as nan.
double r2_or_nan(const std::vector<double>& y, const std::vector<double>& yhat) {
    try {
        return r2_score(y, yhat);
    } catch (const std::invalid_argument&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

EvalRow make_row(const std::string& name, std::size_t samples, const std::vector<double>& y,
                 const std::vector<double>& yhat, std::size_t rates) {
    EvalRow row;
    row.name = name;
    row.samples = samples;
    row.values = y.size();
    row.r2 = r2_or_nan(y, yhat);
    row.mae = mae_stats(y, yhat);
    // Values are stored sample-major, then rate, then tile.
    const std::size_t per_sample = y.size() / samples, per_rate = per_sample / rates;
    for (std::size_t r = 0; r < rates; ++r) {
        std::vector<double> a, b;
        for (std::size_t s = 0; s < samples; ++s)
            for (std::size_t k = 0; k < per_rate; ++k) {
                const std::size_t i = s * per_sample + r * per_rate + k;
                a.push_back(y[i]);
                b.push_back(yhat[i]);
            }
        row.r2_per_rate.push_back(r2_or_nan(a, b));
    }
    return row;
}

void put_row(KeyValues& kv, const std::string& prefix, const EvalRow& row, const std::vector<ShadingRate>& rates) {
    kv.set(prefix + ".samples", static_cast<std::uint64_t>(row.samples));
    kv.set(prefix + ".values", static_cast<std::uint64_t>(row.values));
    kv.set(prefix + ".r2", row.r2);
    kv.set(prefix + ".mae_total", row.mae.total);
    kv.set(prefix + ".mae_under", row.mae.under);
    kv.set(prefix + ".under_count", static_cast<std::uint64_t>(row.mae.under_count));
    kv.set(prefix + ".sigma_mae", row.mae.sigma);
    kv.set(prefix + ".variance_mae", row.mae.variance);
    kv.set(prefix + ".consistent", row.mae.consistent() ? "yes" : "no");
    for (std::size_t r = 0; r < row.r2_per_rate.size() && r < rates.size(); ++r)
        kv.set(prefix + ".r2." + rates[r].label(), row.r2_per_rate[r]);
}

}  // namespace

EvalReport evaluate(const net::ModelFile& model, const std::vector<const LoadedDataset*>& datasets,
                    EvalSubset subset) {
    if (datasets.empty()) throw std::invalid_argument("evaluate: no datasets");
    EvalReport report;
    const auto rates = parse_rate_list(model.provenance.get("rates"));
    std::vector<double> all_y, all_yhat;
    std::size_t all_samples = 0;
    for (const LoadedDataset* data : datasets) {
        check_compatible(model, data->manifest);
        const auto ids = select_samples(model, *data, subset);
        if (ids.empty()) throw std::invalid_argument("evaluate: no samples selected in " + data->dir.string());
        if (report.subset.empty())
            report.subset = subset == EvalSubset::automatic
                                ? (model.provenance.get_or("dataset.fingerprint", "") == hex32(data->fingerprint)
                                       ? "holdout"
                                       : "all")
                                : subset == EvalSubset::holdout ? "holdout"
                                : subset == EvalSubset::train   ? "train"
                                                                : "all";
        std::vector<double> y, yhat;
        constexpr std::size_t kBatch = 16;
        nn::TensorF inputs, targets;
        for (std::size_t start = 0; start < ids.size(); start += kBatch) {
            const std::span<const std::size_t> chunk(ids.data() + start, std::min(kBatch, ids.size() - start));
            net::assemble_batch(data->samples, chunk, inputs, targets);
            const auto pred = net::predict_tiles(model.model, inputs, model.transform);
            for (std::size_t i = 0; i < targets.size(); ++i) {
                y.push_back(targets[i]);
                yhat.push_back(pred.raw[i]);
            }
        }
        const std::string name = data->manifest.config.scene;
        report.rows.push_back(make_row(name, ids.size(), y, yhat, rates.size()));
        all_y.insert(all_y.end(), y.begin(), y.end());
        all_yhat.insert(all_yhat.end(), yhat.begin(), yhat.end());
        all_samples += ids.size();
        report.echo.set("dataset." + std::to_string(report.rows.size() - 1) + ".fingerprint", hex32(data->fingerprint));
        report.echo.set("dataset." + std::to_string(report.rows.size() - 1) + ".mu_y", data->manifest.mu_y);
    }
    report.overall = make_row("overall", all_samples, all_y, all_yhat, rates.size());

    KeyValues& e = report.echo;
    e.set("model.metric", model.provenance.get_or("metric", ""));
    e.set("model.rates", model.provenance.get_or("rates", ""));
    e.set("model.w", static_cast<std::uint64_t>(model.model.config.tile_size));
    e.set("model.schedule", net::join(model.model.config.pooling));
    e.set("model.transform", transforms::to_string(model.transform.kind));
    e.set("model.mu_y", join_doubles(model.transform.mu));
    e.set("model.mu_mode", transforms::to_string(model.transform.mu_mode));
    e.set("model.train_seed", model.provenance.get_or("train.seed", ""));
    e.set("model.dataset", model.provenance.get_or("dataset.fingerprint", ""));
    return report;
}

std::string EvalReport::to_text() const {
    KeyValues kv = echo;
    kv.set("subset", subset);
    const auto rates = parse_rate_list(echo.get("model.rates"));
    for (std::size_t i = 0; i < rows.size(); ++i)
        put_row(kv, "scene." + std::to_string(i) + "." + rows[i].name, rows[i], rates);
    put_row(kv, "overall", overall, rates);
    return "# evaluation report (raw metric space)\n" + kv.to_string();
}

}  // namespace percept::harness
