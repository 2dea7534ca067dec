#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace percept {

/// 8-bit RGB image, rows top to bottom, 3 bytes per pixel.
struct Rgb8Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Rgb8Image() = default;
    Rgb8Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* at(int x, int y) const {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

/// Writes a non-interlaced 8-bit RGB PNG without timestamps, so the bytes
/// depend only on the pixels.
void write_png(const std::filesystem::path& path, const Rgb8Image& image);

Rgb8Image read_png(const std::filesystem::path& path);

}  // namespace percept
