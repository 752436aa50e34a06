#pragma once

#include <optional>
#include <vector>

#include "gsmpc/errors.hpp"
#include "gsmpc/math.hpp"

namespace gsmpc::splat {

/// One 3D Gaussian: position, rotation, per-axis scale, opacity, color.
struct Splat {
    Vec3 position = Vec3::Zero();          // g, world meters
    Vec4 rotation = quat::identity();      // r, unit quaternion (w,x,y,z)
    Vec3 scale = Vec3::Ones();             // s, per-axis std-dev in meters, > 0
    double opacity = 1.0;                  // sigma in [0,1]
    Vec3 color = Vec3::Zero();             // c, RGB in [0,1]

    /// Clamp opacity/color into range, floor scale, renormalize rotation.
    void project_to_valid(double scale_min = 1e-5, double scale_max = 1.0) {
        rotation = quat::normalized(rotation);
        scale = scale.cwiseMax(scale_min).cwiseMin(scale_max);
        opacity = std::clamp(opacity, 0.0, 1.0);
        color = color.cwiseMax(0.0).cwiseMin(1.0);
    }
};

/// Ordered collection of splats for one timestep. Index identity is stable.
struct SplatScene {
    std::vector<Splat> splats;
    int frame_id = 0;

    std::size_t size() const { return splats.size(); }
    bool empty() const { return splats.empty(); }
};

/// Pinhole camera: rigid world->camera transform plus intrinsics in pixels.
struct CameraView {
    Mat3 rotation = Mat3::Identity();  // W, world->camera rotation
    Vec3 translation = Vec3::Zero();   // camera = W * world + translation
    double fx = 1.0, fy = 1.0;
    double cx = 0.0, cy = 0.0;
    int width = 0, height = 0;

    Vec3 to_camera(const Vec3& p_world) const { return rotation * p_world + translation; }
    Vec3 to_world(const Vec3& p_camera) const {
        return rotation.transpose() * (p_camera - translation);
    }
    /// Pinhole projection of a camera-frame point to pixel coordinates.
    Vec2 project(const Vec3& p_camera) const {
        return Vec2(fx * p_camera.x() / p_camera.z() + cx,
                    fy * p_camera.y() / p_camera.z() + cy);
    }
    Vec3 camera_center_world() const { return -rotation.transpose() * translation; }

    Mat4 pose_matrix() const {
        Mat4 m = Mat4::Identity();
        m.topLeftCorner<3, 3>() = rotation;
        m.topRightCorner<3, 1>() = translation;
        return m;
    }
};

/// RGB image in [0,1] with optional per-pixel depth in meters (0 = invalid).
struct Image {
    int width = 0, height = 0;
    std::vector<Vec3> rgb;                  // row-major, y * width + x
    std::optional<std::vector<double>> depth;

    Image() = default;
    Image(int w, int h, const Vec3& fill = Vec3::Zero())
        : width(w), height(h), rgb(static_cast<std::size_t>(w) * h, fill) {}

    Vec3& at(int x, int y) { return rgb[static_cast<std::size_t>(y) * width + x]; }
    const Vec3& at(int x, int y) const { return rgb[static_cast<std::size_t>(y) * width + x]; }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    bool same_shape(const Image& other) const {
        return width == other.width && height == other.height;
    }
};

/// Per-splat gradients, index-aligned with the owning scene.
struct SplatGrad {
    Vec3 d_position = Vec3::Zero();
    Vec4 d_rotation = Vec4::Zero();  // w.r.t. the raw (stored) quaternion
    Vec3 d_scale = Vec3::Zero();
    double d_opacity = 0.0;
    Vec3 d_color = Vec3::Zero();
};

using SceneGrad = std::vector<SplatGrad>;

inline SceneGrad zero_grad(const SplatScene& scene) { return SceneGrad(scene.size()); }

inline void accumulate(SceneGrad& into, const SceneGrad& from) {
    if (into.size() != from.size())
        throw LengthMismatch("gradient size mismatch");
    for (std::size_t i = 0; i < into.size(); ++i) {
        into[i].d_position += from[i].d_position;
        into[i].d_rotation += from[i].d_rotation;
        into[i].d_scale += from[i].d_scale;
        into[i].d_opacity += from[i].d_opacity;
        into[i].d_color += from[i].d_color;
    }
}

} // namespace gsmpc::splat
