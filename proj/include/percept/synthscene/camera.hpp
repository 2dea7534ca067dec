#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace percept::synthscene {

using Vec3 = Eigen::Vector3d;

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length
};

/// Pinhole camera. View space is x right, y up, z along `forward`, so
/// visible points have positive view-space z and depth is that z.
struct Camera {
    Vec3 position = Vec3::Zero();
    Vec3 forward = Vec3::UnitZ();
    Vec3 up = Vec3::UnitY();
    double fov_y = 1.0471975511965976;  // 60 degrees
    double near = 0.05;
    double far = 100.0;

    /// Camera at `position` looking along `dir`, up vector derived from
    /// `world_up`. Throws std::invalid_argument when dir is parallel to it.
    static Camera look_along(const Vec3& position, const Vec3& dir,
                             const Vec3& world_up = Vec3::UnitY());

    Vec3 right() const { return up.cross(forward); }

    /// Throws std::invalid_argument unless the basis is orthonormal and
    /// far > near > 0.
    void validate() const;

    /// Primary ray through the center of pixel (x, y); row 0 is the top.
    Ray pixel_ray(double x, double y, int width, int height) const;

    Vec3 to_view(const Vec3& world) const;
    Vec3 dir_to_view(const Vec3& world_dir) const;
    Vec3 dir_to_world(const Vec3& view_dir) const;

    /// Continuous pixel coordinates of a view-space point (pixel centers at
    /// half-integers). Only meaningful for view.z() > 0.
    Eigen::Vector2d project(const Vec3& view, int width, int height) const;
};

}  // namespace percept::synthscene
