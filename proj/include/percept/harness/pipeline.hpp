#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "percept/core/keyvalue.hpp"
#include "percept/harness/stats.hpp"
#include "percept/net/model_file.hpp"
#include "percept/net/train.hpp"
#include "percept/synthscene/capture.hpp"

namespace percept::harness {

struct LoadedDataset {
    std::filesystem::path dir;
    synthscene::DatasetManifest manifest;
    std::vector<net::TrainSample> samples;  // index order
    std::uint32_t fingerprint = 0;          // CRC-32 over manifest and sample tensors
};

LoadedDataset load_dataset(const std::filesystem::path& dir);

std::string hex32(std::uint32_t v);

struct TrainRequest {
    transforms::TransformSpec transform;
    net::ScheduleSource schedule = net::ScheduleSource::formula;
    std::size_t epochs = 200;
    std::size_t batch_size = 16;
    double learning_rate = 1e-4;
    std::uint64_t seed = 1;
    std::function<void(const net::EpochStats&)> on_epoch;
};

/// Splits off the holdout, trains, and records metric, rates, dataset
/// fingerprint, holdout ids and the loss history in the provenance.
net::ModelFile train_model(const LoadedDataset& data, const TrainRequest& request);

enum class EvalSubset { automatic, holdout, train, all };

struct EvalRow {
    std::string name;
    std::size_t samples = 0;
    std::size_t values = 0;
    double r2 = 0.0;
    MaeStats mae;
    std::vector<double> r2_per_rate;
};

struct EvalReport {
    KeyValues echo;  // model and dataset configuration
    std::string subset;
    std::vector<EvalRow> rows;  // one per dataset
    EvalRow overall;

    /// Deterministic key=value text.
    std::string to_text() const;
};

/// Predictions vs targets in raw metric space. `automatic` evaluates the
/// recorded holdout when the dataset is the training dataset and every
/// sample otherwise. Throws std::invalid_argument on a metric, rate or tile
/// size mismatch, or a holdout/train request on a foreign dataset.
EvalReport evaluate(const net::ModelFile& model, const std::vector<const LoadedDataset*>& datasets,
                    EvalSubset subset = EvalSubset::automatic);

/// Sample ids selected by `subset` for this model/dataset pair.
std::vector<std::size_t> select_samples(const net::ModelFile& model, const LoadedDataset& data, EvalSubset subset);

/// Raw (R, H/w, W/w) predictions for one (C, H, W) input.
nn::TensorF predict_sample(const net::ModelFile& model, const nn::TensorF& input);

/// Throws std::invalid_argument unless metric, rates and w agree.
void check_compatible(const net::ModelFile& model, const synthscene::DatasetManifest& manifest);

}  // namespace percept::harness
