#include "gsmpc/splat/density.hpp"

#include <cmath>

#include "gsmpc/splat/render.hpp"

namespace gsmpc::splat {

DensityCache build_density_cache(const SplatScene& scene) {
    DensityCache cache;
    cache.scene = &scene;
    cache.cov_inv.reserve(scene.size());
    cache.rot.reserve(scene.size());
    cache.quat_n.reserve(scene.size());
    for (const Splat& sp : scene.splats) {
        const Vec4 qn = quat::normalized(sp.rotation);
        const Mat3 r = quat::to_rotation(qn);
        const Vec3 inv_s2 = sp.scale.cwiseProduct(sp.scale).cwiseInverse();
        cache.cov_inv.push_back(r * inv_s2.asDiagonal() * r.transpose());
        cache.rot.push_back(r);
        cache.quat_n.push_back(qn);
    }
    return cache;
}

double density_from_cache(const DensityCache& cache, const Vec3& x) {
    double total = 0.0;
    for (std::size_t i = 0; i < cache.scene->size(); ++i) {
        const Splat& sp = cache.scene->splats[i];
        const Vec3 d = x - sp.position;
        const double q = d.dot(cache.cov_inv[i] * d);
        total += sp.opacity * std::exp(-0.5 * q);
    }
    return total;
}

double density(const SplatScene& scene, const Vec3& x) {
    return density_from_cache(build_density_cache(scene), x);
}

void density_backward(const DensityCache& cache, const Vec3& x, double d_out, SceneGrad& grad) {
    if (grad.size() != cache.scene->size())
        throw LengthMismatch("gradient size mismatch");
    for (std::size_t i = 0; i < cache.scene->size(); ++i) {
        const Splat& sp = cache.scene->splats[i];
        const Vec3 d = x - sp.position;
        const Mat3& q_inv = cache.cov_inv[i];
        const Vec3 qd = q_inv * d;
        const double q = d.dot(qd);
        const double e = std::exp(-0.5 * q);

        grad[i].d_opacity += d_out * e;
        // d exp / d g = exp * Qd
        grad[i].d_position += d_out * sp.opacity * e * qd;

        // d exp / d Sigma = 1/2 exp * Qd Qd^T (through the inverse)
        const Mat3 d_cov = d_out * sp.opacity * e * 0.5 * qd * qd.transpose();
        const Mat3& r = cache.rot[i];
        const Mat3 rt_d_r = r.transpose() * d_cov * r;
        for (int axis = 0; axis < 3; ++axis)
            grad[i].d_scale[axis] += 2.0 * sp.scale[axis] * rt_d_r(axis, axis);

        const Vec3 s2 = sp.scale.cwiseProduct(sp.scale);
        const Mat3 d_rot = 2.0 * d_cov * r * s2.asDiagonal();
        const auto dr_dq = quat::rotation_jacobian(cache.quat_n[i]);
        Vec4 d_qn;
        for (int c = 0; c < 4; ++c)
            d_qn[c] = (d_rot.array() * dr_dq[c].array()).sum();
        grad[i].d_rotation += quat::normalize_backward(sp.rotation, d_qn);
    }
}

} // namespace gsmpc::splat
