#include "percept/core/png.hpp"

#include <png.h>

#include <stdexcept>

namespace percept {

void write_png(const std::filesystem::path& path, const Rgb8Image& image) {
    if (image.width <= 0 || image.height <= 0 ||
        image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3)
        throw std::invalid_argument("write_png: malformed image");
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels.data(), 0, nullptr))
        throw std::runtime_error("png: cannot write " + path.string() + ": " + img.message);
}

Rgb8Image read_png(const std::filesystem::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw std::runtime_error("png: cannot read " + path.string() + ": " + img.message);
    img.format = PNG_FORMAT_RGB;
    Rgb8Image out(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
        png_image_free(&img);
        throw std::runtime_error("png: decode failed for " + path.string() + ": " + img.message);
    }
    return out;
}

}  // namespace percept
