#pragma once

#include <cstddef>
#include <vector>

#include "percept/core/rate.hpp"
#include "percept/nn/tensor.hpp"
#include "percept/synthscene/scene.hpp"

namespace percept::synthscene {

using nn::TensorF;

/// Deferred-shading attribute planes of one frame. Planes are (H, W) or
/// (3, H, W). Sky pixels have depth == camera.far and zero attributes.
struct GBufferFrame {
    int width = 0;
    int height = 0;
    Camera camera;
    TensorF depth;      // view-space z
    TensorF normal;     // view-space, 3 planes
    TensorF diffuse;    // albedo RGB
    TensorF specular;
    TensorF roughness;
    TensorF shadow;     // 1 lit, 0 shadowed
    TensorF emissive;
    TensorF position;   // world space, 3 planes

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    bool sky(int x, int y) const { return depth[index(x, y)] >= static_cast<float>(camera.far); }
    /// Fraction of pixels that show geometry.
    double coverage() const;
};

/// One primary ray per pixel center; geometry beyond the far plane is sky.
GBufferFrame render_gbuffer(const Scene& scene, const Camera& camera, int width, int height);

/// Geometry coverage of a primary-ray-only render at res x res.
double probe_coverage(const Scene& scene, const Camera& camera, int res = 32);

inline constexpr double kAmbient = 0.1;
inline constexpr float kSkyColor[3] = {0.55f, 0.68f, 0.85f};

/// Blinn-Phong exponent for a roughness in (0, 1].
double phong_exponent(double roughness);

/// Tone-mapped color of the G-buffer sample at (x, y). Must not be sky.
Eigen::Vector3f shade_pixel(const GBufferFrame& frame, int x, int y, const DirectionalLight& light);

/// (3, H, W) image shaded once per u x v block at the block's center
/// sample. Throws std::invalid_argument when the strides do not divide the
/// frame.
TensorF shade(const GBufferFrame& frame, ShadingRate rate, const DirectionalLight& light);

/// Per-tile rates: rates[ty * tiles_x + tx] applies to the w x w tile.
TensorF shade_tiles(const GBufferFrame& frame, const std::vector<ShadingRate>& rates,
                    std::size_t w, const DirectionalLight& light);

inline constexpr double kReprojectionDepthTolerance = 0.01;  // relative

struct Reprojection {
    TensorF color;  // (3, H, W); 0 where unseen
    TensorF mask;   // (H, W); 1 seen, 0 unseen
};

/// Nearest-pixel temporal reprojection of prev_image into the current view.
Reprojection reproject(const GBufferFrame& prev, const TensorF& prev_image, const GBufferFrame& cur);

}  // namespace percept::synthscene
