#include "gsmpc/splat/render.hpp"

#include <algorithm>
#include <cmath>

namespace gsmpc::splat {

namespace {

Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& t, double fx, double fy) {
    Eigen::Matrix<double, 2, 3> j;
    const double iz = 1.0 / t.z();
    const double iz2 = iz * iz;
    j << fx * iz, 0.0, -fx * t.x() * iz2,
        0.0, fy * iz, -fy * t.y() * iz2;
    return j;
}

Mat2 invert_2x2(const Mat2& m) {
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    Mat2 inv;
    inv << m(1, 1), -m(0, 1),
        -m(1, 0), m(0, 0);
    return inv / det;
}

} // namespace

Mat3 build_covariance(const Splat& splat) {
    const Vec4 q = quat::normalized(splat.rotation);
    const Mat3 r = quat::to_rotation(q);
    const Vec3 s2 = splat.scale.cwiseProduct(splat.scale);
    return r * s2.asDiagonal() * r.transpose();
}

Mat2 project_covariance(const Mat3& sigma3d, const Vec3& splat_pos, const CameraView& view,
                        double near_plane) {
    const Vec3 t = view.to_camera(splat_pos);
    if (t.z() <= near_plane)
        throw BehindCamera("splat at or behind the near plane");
    const auto j = projection_jacobian(t, view.fx, view.fy);
    const Eigen::Matrix<double, 2, 3> m = j * view.rotation;
    Mat2 cov = m * sigma3d * m.transpose();
    cov.diagonal().array() += kCovarianceFloor;
    return cov;
}

RenderCache project_scene(const SplatScene& scene, const CameraView& view,
                          const Vec3& background) {
    RenderCache cache;
    cache.scene = &scene;
    cache.view = view;
    cache.background = background;
    cache.projected.reserve(scene.size());

    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Splat& sp = scene.splats[i];
        const Vec3 t = view.to_camera(sp.position);
        if (t.z() <= kDefaultNearPlane)
            continue;

        ProjectedSplat ps;
        ps.index = static_cast<int>(i);
        ps.t_cam = t;
        ps.depth = t.z();
        ps.center_px = view.project(t);
        ps.quat_raw_norm = sp.rotation.norm();
        ps.quat_n = quat::normalized(sp.rotation);
        ps.rot = quat::to_rotation(ps.quat_n);
        const Vec3 s2 = sp.scale.cwiseProduct(sp.scale);
        ps.cov3d = ps.rot * s2.asDiagonal() * ps.rot.transpose();
        ps.jacobian = projection_jacobian(t, view.fx, view.fy);
        const Eigen::Matrix<double, 2, 3> m = ps.jacobian * view.rotation;
        ps.cov2d = m * ps.cov3d * m.transpose();
        ps.cov2d.diagonal().array() += kCovarianceFloor;
        ps.cov2d_inv = invert_2x2(ps.cov2d);
        ps.bbox_half_x = 3.0 * std::sqrt(ps.cov2d(0, 0));
        ps.bbox_half_y = 3.0 * std::sqrt(ps.cov2d(1, 1));
        cache.projected.push_back(ps);
    }

    std::stable_sort(cache.projected.begin(), cache.projected.end(),
                     [](const ProjectedSplat& a, const ProjectedSplat& b) {
                         if (a.depth != b.depth)
                             return a.depth < b.depth;
                         return a.index < b.index;
                     });
    return cache;
}

PixelFragments pixel_fragments(const RenderCache& cache, double px, double py) {
    PixelFragments out;
    double transmittance = 1.0;
    for (std::size_t k = 0; k < cache.projected.size(); ++k) {
        const ProjectedSplat& ps = cache.projected[k];
        const double dx = px - ps.center_px.x();
        const double dy = py - ps.center_px.y();
        if (std::abs(dx) > ps.bbox_half_x || std::abs(dy) > ps.bbox_half_y)
            continue;
        const double q = ps.cov2d_inv(0, 0) * dx * dx + 2.0 * ps.cov2d_inv(0, 1) * dx * dy +
                         ps.cov2d_inv(1, 1) * dy * dy;
        if (q > kCutoffMahalanobisSq)
            continue;
        const double e = std::exp(-0.5 * q);
        const double alpha = cache.scene->splats[ps.index].opacity * e;
        if (alpha <= 0.0)
            continue;
        Fragment f;
        f.proj_index = static_cast<int>(k);
        f.alpha = alpha;
        f.transmittance = transmittance;
        f.exp_term = e;
        f.offset = Vec2(dx, dy);
        out.fragments.push_back(f);
        transmittance *= 1.0 - alpha;
    }
    out.final_transmittance = transmittance;
    return out;
}

Image render_from_cache(const RenderCache& cache) {
    Image img(cache.view.width, cache.view.height, cache.background);
    for (int y = 0; y < cache.view.height; ++y) {
        for (int x = 0; x < cache.view.width; ++x) {
            const double px = x + 0.5;
            const double py = y + 0.5;
            PixelFragments frags = pixel_fragments(cache, px, py);
            Vec3 color = Vec3::Zero();
            for (const Fragment& f : frags.fragments) {
                const ProjectedSplat& ps = cache.projected[f.proj_index];
                color += cache.scene->splats[ps.index].color * f.alpha * f.transmittance;
            }
            color += cache.background * frags.final_transmittance;
            img.at(x, y) = color;
        }
    }
    return img;
}

Image render(const SplatScene& scene, const CameraView& view, const Vec3& background) {
    return render_from_cache(project_scene(scene, view, background));
}

SceneGrad render_backward(const RenderCache& cache, const std::vector<Vec3>& d_image) {
    const SplatScene& scene = *cache.scene;
    if (d_image.size() != static_cast<std::size_t>(cache.view.width) * cache.view.height)
        throw DimensionMismatch("image gradient does not match view resolution");

    SceneGrad grad(scene.size());
    // Per projected splat: accumulated gradients w.r.t. projected center and
    // inverse 2x2 covariance, folded through the projection chain afterwards.
    std::vector<Vec2> d_center(cache.projected.size(), Vec2::Zero());
    std::vector<Mat2> d_cov_inv(cache.projected.size(), Mat2::Zero());

    for (int y = 0; y < cache.view.height; ++y) {
        for (int x = 0; x < cache.view.width; ++x) {
            const Vec3& dldc = d_image[static_cast<std::size_t>(y) * cache.view.width + x];
            if (dldc.isZero(0.0))
                continue;
            PixelFragments frags = pixel_fragments(cache, x + 0.5, y + 0.5);
            if (frags.fragments.empty())
                continue;

            // Walk back to front; `tail` is the color contributed by
            // everything behind the current fragment plus the background.
            Vec3 tail = cache.background * frags.final_transmittance;
            for (std::size_t fi = frags.fragments.size(); fi-- > 0;) {
                const Fragment& f = frags.fragments[fi];
                const ProjectedSplat& ps = cache.projected[f.proj_index];
                const Splat& sp = scene.splats[ps.index];

                grad[ps.index].d_color += dldc * f.alpha * f.transmittance;

                const double one_minus = std::max(1.0 - f.alpha, 1e-6);
                const Vec3 dcol_dalpha = sp.color * f.transmittance - tail / one_minus;
                const double dl_dalpha = dldc.dot(dcol_dalpha);

                grad[ps.index].d_opacity += dl_dalpha * f.exp_term;

                // alpha = sigma * exp(-q/2), q = off^T Sinv off
                const double dl_dq = dl_dalpha * f.alpha * -0.5;
                const Vec2 sinv_off = ps.cov2d_inv * f.offset;
                // d q / d center = -2 Sinv off
                d_center[f.proj_index] += dl_dq * (-2.0) * sinv_off;
                d_cov_inv[f.proj_index] += dl_dq * f.offset * f.offset.transpose();

                tail += sp.color * f.alpha * f.transmittance;
            }
        }
    }

    // Fold the per-splat screenspace gradients through projection, covariance
    // construction, and quaternion normalization.
    for (std::size_t k = 0; k < cache.projected.size(); ++k) {
        const ProjectedSplat& ps = cache.projected[k];
        const Splat& sp = scene.splats[ps.index];
        if (d_center[k].isZero(0.0) && d_cov_inv[k].isZero(0.0))
            continue;

        // d cov2d from d cov2d_inv: dL/dS = -Sinv^T dL/dSinv Sinv^T
        const Mat2 d_cov2d = -ps.cov2d_inv * d_cov_inv[k] * ps.cov2d_inv;

        const Eigen::Matrix<double, 2, 3> m = ps.jacobian * cache.view.rotation;
        const Mat3 d_cov3d = m.transpose() * d_cov2d * m;

        // Camera-frame covariance A = W cov3d W^T feeds cov2d = J A J^T.
        const Mat3 a = cache.view.rotation * ps.cov3d * cache.view.rotation.transpose();
        const Eigen::Matrix<double, 2, 3> d_jacobian = 2.0 * d_cov2d * ps.jacobian * a;

        // Projected center mu = project(t); d mu/d t is the same Jacobian.
        Vec3 d_t = ps.jacobian.transpose() * d_center[k];

        // Jacobian entries J00 = fx/z, J02 = -fx x/z^2, J11 = fy/z, J12 = -fy y/z^2.
        const double fx = cache.view.fx, fy = cache.view.fy;
        const double z = ps.t_cam.z();
        const double iz2 = 1.0 / (z * z);
        const double iz3 = iz2 / z;
        d_t.x() += d_jacobian(0, 2) * (-fx * iz2);
        d_t.y() += d_jacobian(1, 2) * (-fy * iz2);
        d_t.z() += d_jacobian(0, 0) * (-fx * iz2) + d_jacobian(1, 1) * (-fy * iz2) +
                   d_jacobian(0, 2) * (2.0 * fx * ps.t_cam.x() * iz3) +
                   d_jacobian(1, 2) * (2.0 * fy * ps.t_cam.y() * iz3);

        grad[ps.index].d_position += cache.view.rotation.transpose() * d_t;

        // cov3d = R diag(s^2) R^T
        const Vec3 s2 = sp.scale.cwiseProduct(sp.scale);
        const Mat3 rt_d_r = ps.rot.transpose() * d_cov3d * ps.rot;
        for (int axis = 0; axis < 3; ++axis)
            grad[ps.index].d_scale[axis] += 2.0 * sp.scale[axis] * rt_d_r(axis, axis);

        const Mat3 d_rot = 2.0 * d_cov3d * ps.rot * s2.asDiagonal();
        const auto dr_dq = quat::rotation_jacobian(ps.quat_n);
        Vec4 d_qn;
        for (int c = 0; c < 4; ++c)
            d_qn[c] = (d_rot.array() * dr_dq[c].array()).sum();
        grad[ps.index].d_rotation += quat::normalize_backward(sp.rotation, d_qn);
    }
    return grad;
}

} // namespace gsmpc::splat
