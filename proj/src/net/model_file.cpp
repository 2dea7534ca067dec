#include "percept/net/model_file.hpp"

#include <stdexcept>

#include "percept/core/binary_io.hpp"
#include "percept/nn/weights_io.hpp"

namespace percept::net {

namespace {

bool reserved(const std::string& key) {
    return key.starts_with("net.") || key.starts_with("transform.") || key.starts_with("bn.");
}

}  // namespace

std::vector<std::uint8_t> save_model(const ModelFile& file) {
    file.model.config.validate();
    file.transform.validate();
    KeyValues kv;
    for (const auto& [k, v] : file.provenance.entries()) {
        if (reserved(k)) throw std::invalid_argument("model provenance uses reserved key " + k);
        kv.set(k, v);
    }
    file.model.config.store(kv);
    file.transform.store(kv);
    const auto& first_bn = file.model.net.blocks.at(0).bn;
    if (!first_bn) throw std::invalid_argument("model: first block has no batch norm");
    kv.set("bn.epsilon", first_bn->epsilon);
    kv.set("bn.momentum", first_bn->momentum);
    return nn::save_network(file.model.net, kv.to_string());
}

ModelFile load_model(std::span<const std::uint8_t> bytes) {
    auto loaded = nn::load_network(bytes);
    KeyValues kv;
    try {
        kv = KeyValues::parse(loaded.metadata);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("model metadata: ") + e.what());
    }
    ModelFile file;
    try {
        file.model.config = NetworkConfig::load(kv);
        file.transform = transforms::TransformSpec::load(kv);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("model metadata: ") + e.what());
    }
    const auto& cfg = file.model.config;
    auto& net = loaded.network;
    if (net.blocks.size() != kLayers) throw FormatError("model: expected 5 conv layers");
    const double eps = kv.get_double("bn.epsilon"), momentum = kv.get_double("bn.momentum");
    for (std::size_t i = 0; i < kLayers; ++i) {
        auto& b = net.blocks[i];
        if (b.conv.in_channels != cfg.layer_in(i) || b.conv.out_channels != cfg.layer_out(i) ||
            b.conv.groups != cfg.groups[i])
            throw FormatError("model: layer " + std::to_string(i + 1) +
                              " shape does not match the stored configuration");
        if (bool(b.bn) != (i + 1 < kLayers))
            throw FormatError("model: batch norm must follow layers 1-4 only");
        if (b.bn) {
            b.bn->epsilon = eps;
            b.bn->momentum = momentum;
        }
        b.pool = cfg.pooling[i];
    }
    net.final_sigmoid = true;
    file.model.net = std::move(net);
    for (const auto& [k, v] : kv.entries())
        if (!reserved(k)) file.provenance.set(k, v);
    return file;
}

void save_model_file(const ModelFile& file, const std::filesystem::path& path) {
    write_file(path, save_model(file));
}

ModelFile load_model_file(const std::filesystem::path& path) { return load_model(read_file(path)); }

}  // namespace percept::net
