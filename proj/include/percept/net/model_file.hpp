#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "percept/core/keyvalue.hpp"
#include "percept/net/model.hpp"
#include "percept/transforms/transform.hpp"

namespace percept::net {

/// Everything needed to run a trained model: weights, configuration, the
/// training-time transform, and free-form provenance (metric, rates,
/// dataset fingerprint, holdout ids, seeds).
struct ModelFile {
    NetworkModel model;
    transforms::TransformSpec transform;
    KeyValues provenance;  // keys without the reserved "net.", "transform.", "bn." prefixes
};

/// Serialized in the weights format; the metadata block carries the
/// configuration, transform, batch-norm hyperparameters and provenance.
std::vector<std::uint8_t> save_model(const ModelFile& file);
ModelFile load_model(std::span<const std::uint8_t> bytes);

void save_model_file(const ModelFile& file, const std::filesystem::path& path);
ModelFile load_model_file(const std::filesystem::path& path);

}  // namespace percept::net
