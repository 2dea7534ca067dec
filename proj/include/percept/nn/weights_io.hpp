#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "percept/nn/network.hpp"

namespace percept::nn {

/// Weights file layout (all integers and reals little-endian):
///
///   "PNET"  u16 version=1  u16 layer_count
///   u32 metadata_length, metadata bytes (key=value lines)
///   per layer: u8 kind (1 = conv, 2 = batch norm), u32 shape header, reals
///     conv:       shape = in | out << 12 | groups << 24; weights then bias
///     batch norm: shape = channels; gamma, beta, running mean, running var
///   u32 CRC-32 of every preceding byte
///
/// A batch-norm layer belongs to the conv layer written just before it.
/// Pool factors and the final sigmoid are not stored here; callers keep them
/// in the metadata.
inline constexpr std::uint16_t kWeightsVersion = 1;

enum class LayerKind : std::uint8_t { conv = 1, batchnorm = 2 };

std::vector<std::uint8_t> save_network(const Network<float>& net, std::string_view metadata);

struct LoadedNetwork {
    Network<float> network;  // pool factors set to 1
    std::string metadata;
};

/// Throws FormatError on bad magic, version mismatch, truncation, CRC
/// mismatch or inconsistent layer shapes.
LoadedNetwork load_network(std::span<const std::uint8_t> bytes);

}  // namespace percept::nn
