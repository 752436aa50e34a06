#pragma once

#include <vector>

#include "gsmpc/splat/types.hpp"

namespace gsmpc::splat {

/// Sigma = R diag(s^2) R^T for the splat's (normalized) rotation and scale.
Mat3 build_covariance(const Splat& splat);

/// Screenspace covariance J W Sigma W^T J^T plus an isotropic floor that
/// keeps the 2x2 result invertible. Throws BehindCamera for camera-frame
/// z <= near_plane.
Mat2 project_covariance(const Mat3& sigma3d, const Vec3& splat_pos, const CameraView& view,
                        double near_plane = 0.01);

constexpr double kCovarianceFloor = 1e-6;
constexpr double kCutoffMahalanobisSq = 9.0;  // 3 standard deviations
constexpr double kDefaultNearPlane = 0.01;

/// View-dependent per-splat quantities cached for shading and backprop.
struct ProjectedSplat {
    int index = -1;          // index into the scene
    double depth = 0.0;      // camera-frame z
    Vec3 t_cam;              // camera-frame position
    Vec2 center_px;          // projected center
    Mat2 cov2d;              // screenspace covariance (with floor)
    Mat2 cov2d_inv;
    double bbox_half_x = 0.0, bbox_half_y = 0.0;  // 3-sigma extent in pixels
    // Cached for the backward pass.
    Eigen::Matrix<double, 2, 3> jacobian;  // d(pixel)/d(camera point)
    Mat3 cov3d;
    Mat3 rot;       // rotation matrix of the normalized quaternion
    Vec4 quat_n;    // normalized quaternion
    double quat_raw_norm = 1.0;
};

/// Scene projected into one view; splat order is the depth order used for
/// blending (stable sort by camera-frame z, ties by scene index).
struct RenderCache {
    const SplatScene* scene = nullptr;
    CameraView view;
    Vec3 background = Vec3::Zero();
    std::vector<ProjectedSplat> projected;  // depth-sorted, behind-camera splats skipped
};

RenderCache project_scene(const SplatScene& scene, const CameraView& view,
                          const Vec3& background);

/// One splat's hit on a pixel: its alpha there and the transmittance in
/// front of it.
struct Fragment {
    int proj_index;      // index into RenderCache::projected
    double alpha;
    double transmittance;
    double exp_term;     // exp(-q/2), alpha = opacity * exp_term
    Vec2 offset;         // pixel - projected center
};

/// Depth-ordered fragments covering one pixel. `final_transmittance` is the
/// product of (1 - alpha) over all of them.
struct PixelFragments {
    std::vector<Fragment> fragments;
    double final_transmittance = 1.0;
};

PixelFragments pixel_fragments(const RenderCache& cache, double px, double py);

/// Shade every pixel of the view from a projected scene.
Image render_from_cache(const RenderCache& cache);

/// Full forward pass: C(p) = sum_i c_i a_i(p) prod_{j<i} (1 - a_j(p)), with
/// left-over transmittance blended against `background`.
Image render(const SplatScene& scene, const CameraView& view, const Vec3& background);

/// Backprop a per-pixel image gradient to all splat parameters. The returned
/// rotation gradient is w.r.t. the raw stored quaternion.
SceneGrad render_backward(const RenderCache& cache, const std::vector<Vec3>& d_image);

} // namespace gsmpc::splat
