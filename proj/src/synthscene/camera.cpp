#include "percept/synthscene/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace percept::synthscene {

Camera Camera::look_along(const Vec3& position, const Vec3& dir, const Vec3& world_up) {
    Camera c;
    c.position = position;
    const double n = dir.norm();
    if (!(n > 0.0)) throw std::invalid_argument("camera: zero view direction");
    c.forward = dir / n;
    const Vec3 right = world_up.cross(c.forward);
    const double rn = right.norm();
    if (rn < 1e-6) throw std::invalid_argument("camera: view direction parallel to up vector");
    c.up = c.forward.cross(right / rn);
    c.up.normalize();
    return c;
}

void Camera::validate() const {
    constexpr double tol = 1e-9;
    if (std::abs(forward.norm() - 1.0) > tol || std::abs(up.norm() - 1.0) > tol ||
        std::abs(forward.dot(up)) > tol)
        throw std::invalid_argument("camera: basis is not orthonormal");
    if (!(near > 0.0) || !(far > near)) throw std::invalid_argument("camera: need far > near > 0");
    if (!(fov_y > 0.0) || !(fov_y < 3.1)) throw std::invalid_argument("camera: bad field of view");
}

Ray Camera::pixel_ray(double x, double y, int width, int height) const {
    const double t = std::tan(0.5 * fov_y);
    const double aspect = static_cast<double>(width) / height;
    const double sx = (2.0 * (x + 0.5) / width - 1.0) * t * aspect;
    const double sy = (1.0 - 2.0 * (y + 0.5) / height) * t;
    Vec3 d = forward + sx * right() + sy * up;
    return {position, d.normalized()};
}

Vec3 Camera::to_view(const Vec3& world) const { return dir_to_view(world - position); }

Vec3 Camera::dir_to_view(const Vec3& d) const { return {d.dot(right()), d.dot(up), d.dot(forward)}; }

Vec3 Camera::dir_to_world(const Vec3& v) const { return v.x() * right() + v.y() * up + v.z() * forward; }

Eigen::Vector2d Camera::project(const Vec3& view, int width, int height) const {
    const double t = std::tan(0.5 * fov_y);
    const double aspect = static_cast<double>(width) / height;
    const double sx = view.x() / (view.z() * t * aspect);
    const double sy = view.y() / (view.z() * t);
    return {(sx + 1.0) * 0.5 * width, (1.0 - sy) * 0.5 * height};
}

}  // namespace percept::synthscene
