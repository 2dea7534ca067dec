#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "percept/nn/tensor.hpp"

namespace percept {

/// ".pten" tensor file: "PTEN", u16 version=1, u8 dtype (0 = f32), u8 rank,
/// u32 dims[rank], then the little-endian payload in row-major order.
inline constexpr std::uint16_t kPtenVersion = 1;

std::vector<std::uint8_t> encode_pten(const nn::TensorF& t);
nn::TensorF decode_pten(std::span<const std::uint8_t> bytes);

void save_pten(const std::filesystem::path& path, const nn::TensorF& t);
nn::TensorF load_pten(const std::filesystem::path& path);

}  // namespace percept
