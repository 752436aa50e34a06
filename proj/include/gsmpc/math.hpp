#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>

namespace gsmpc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Axis-aligned box, closed on all faces.
struct Box3 {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    bool contains(const Vec3& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
    Vec3 clamp(const Vec3& p) const { return p.cwiseMax(min).cwiseMin(max); }
    Vec3 extent() const { return max - min; }
    Vec3 center() const { return 0.5 * (min + max); }
};

// Quaternions are stored as (w, x, y, z) throughout.
namespace quat {

inline Vec4 identity() { return Vec4(1.0, 0.0, 0.0, 0.0); }

inline Vec4 normalized(const Vec4& q) {
    double n = q.norm();
    if (n < 1e-300)
        return identity();
    // Preserve bit-exact values for quaternions that are already unit.
    if (std::abs(n * n - 1.0) < 1e-12)
        return q;
    return q / n;
}

/// Rotation matrix of a unit quaternion (w, x, y, z).
inline Mat3 to_rotation(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

/// dR/dq_k for a unit quaternion, k in {w,x,y,z}.
inline std::array<Mat3, 4> rotation_jacobian(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    std::array<Mat3, 4> d;
    d[0] << 0, -z, y,
        z, 0, -x,
        -y, x, 0;
    d[1] << 0, y, z,
        y, -2 * x, -w,
        z, w, -2 * x;
    d[2] << -2 * y, x, w,
        x, 0, z,
        -w, z, -2 * y;
    d[3] << -2 * z, -w, x,
        w, -2 * z, y,
        x, y, 0;
    for (auto& m : d)
        m *= 2.0;
    return d;
}

/// Hamilton product a ⊗ b.
inline Vec4 multiply(const Vec4& a, const Vec4& b) {
    return Vec4(
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

/// Matrix L(a) with L(a)·b = a ⊗ b, i.e. d(a⊗b)/db.
inline Mat4 left_product_matrix(const Vec4& a) {
    const double w = a[0], x = a[1], y = a[2], z = a[3];
    Mat4 m;
    m << w, -x, -y, -z,
        x, w, -z, y,
        y, z, w, -x,
        z, -y, x, w;
    return m;
}

/// Matrix R(b) with R(b)·a = a ⊗ b, i.e. d(a⊗b)/da.
inline Mat4 right_product_matrix(const Vec4& b) {
    const double w = b[0], x = b[1], y = b[2], z = b[3];
    Mat4 m;
    m << w, -x, -y, -z,
        x, w, z, -y,
        y, -z, w, x,
        z, y, -x, w;
    return m;
}

/// Backprop through q_n = q / |q|: returns dL/dq given dL/dq_n.
inline Vec4 normalize_backward(const Vec4& q, const Vec4& grad_out) {
    double n = q.norm();
    if (n < 1e-300)
        return Vec4::Zero();
    Vec4 qn = q / n;
    return (grad_out - qn * qn.dot(grad_out)) / n;
}

/// Quaternion for a rotation of `angle_rad` about unit `axis`.
inline Vec4 from_axis_angle(const Vec3& axis, double angle_rad) {
    double h = 0.5 * angle_rad;
    Vec3 v = std::sin(h) * axis.normalized();
    return Vec4(std::cos(h), v.x(), v.y(), v.z());
}

} // namespace quat

/// splitmix64, used to derive independent child seeds from one master seed.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace gsmpc
