#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "percept/core/png.hpp"
#include "percept/nn/tensor.hpp"

namespace percept::harness {

/// Piecewise-linear colormap black -> blue -> red -> white with anchors at
/// 0, 1/3, 2/3 and 1; channels rounded half up. Throws std::invalid_argument
/// outside [0, 1].
std::array<std::uint8_t, 3> heat_color(double v);

/// (H, W) map, each value drawn as a scale x scale block.
Rgb8Image heatmap_image(const nn::TensorF& map, int scale = 1);

void heatmap_png(const nn::TensorF& map, const std::filesystem::path& path, int scale = 1);

/// (3, H, W) color in [0, 1] to 8-bit, rounded half up.
Rgb8Image to_rgb8(const nn::TensorF& rgb);

}  // namespace percept::harness
