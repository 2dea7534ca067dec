#include "percept/harness/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace percept::harness {

namespace {

constexpr std::array<std::array<double, 3>, 4> kAnchors = {{
    {0, 0, 0},
    {0, 0, 255},
    {255, 0, 0},
    {255, 255, 255},
}};

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 255.0) + 0.5)); }

}  // namespace

std::array<std::uint8_t, 3> heat_color(double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("heat_color: value outside [0, 1]");
    const double x = v * 3.0;
    const std::size_t seg = std::min<std::size_t>(2, static_cast<std::size_t>(x));
    const double t = x - static_cast<double>(seg);
    std::array<std::uint8_t, 3> c{};
    for (int i = 0; i < 3; ++i)
        c[i] = to_byte(kAnchors[seg][i] + t * (kAnchors[seg + 1][i] - kAnchors[seg][i]));
    return c;
}

Rgb8Image heatmap_image(const nn::TensorF& map, int scale) {
    if (map.rank() != 2) throw std::invalid_argument("heatmap: expected an (H, W) map");
    if (scale < 1) throw std::invalid_argument("heatmap: scale must be >= 1");
    const int h = static_cast<int>(map.dim(0)), w = static_cast<int>(map.dim(1));
    Rgb8Image img(w * scale, h * scale);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto c = heat_color(map[static_cast<std::size_t>(y / scale) * w + x / scale]);
            std::copy(c.begin(), c.end(), img.at(x, y));
        }
    return img;
}

void heatmap_png(const nn::TensorF& map, const std::filesystem::path& path, int scale) {
    write_png(path, heatmap_image(map, scale));
}

Rgb8Image to_rgb8(const nn::TensorF& rgb) {
    if (rgb.rank() != 3 || rgb.dim(0) != 3) throw std::invalid_argument("to_rgb8: expected (3, H, W)");
    const int h = static_cast<int>(rgb.dim(1)), w = static_cast<int>(rgb.dim(2));
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    Rgb8Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(x, y)[c] = to_byte(255.0 * rgb[c * plane + static_cast<std::size_t>(y) * w + x]);
    return img;
}

}  // namespace percept::harness
