#pragma once

// Rigid-body transform algebra: unit quaternions, poses, axis-angle.
//
// Quaternions are Eigen::Quaterniond throughout. Whenever a quaternion is
// flattened into a plain vector (state vectors, files, wire messages) the
// component order is (x, y, z, w), which is also Eigen's storage order.

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>
#include <string>

namespace teleskill {

using Eigen::Matrix3d;
using Eigen::Matrix4d;
using Eigen::Quaterniond;
using Eigen::Vector3d;
using Eigen::Vector4d;

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateQuaternionError : public Error {
public:
    using Error::Error;
};

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Normalizes a raw (x, y, z, w) 4-vector into a unit quaternion.
inline Quaterniond normalize(const Vector4d& xyzw) {
    const double n = xyzw.norm();
    if (!(n > 1e-12) || !std::isfinite(n)) {
        throw DegenerateQuaternionError("cannot normalize quaternion with norm " + std::to_string(n));
    }
    const Vector4d u = xyzw / n;
    return Quaterniond(u.w(), u.x(), u.y(), u.z());
}

inline Quaterniond normalize(const Quaterniond& q) { return normalize(Vector4d(q.coeffs())); }

/// Raw (x, y, z, w) components.
inline Vector4d to_xyzw(const Quaterniond& q) { return q.coeffs(); }

/// Sign-flips q into the hemisphere w >= 0. Same rotation.
inline Quaterniond canonical(const Quaterniond& q) {
    return q.w() < 0.0 ? Quaterniond(-q.w(), -q.x(), -q.y(), -q.z()) : q;
}

struct AxisAngle {
    double angle = 0.0;                      // [rad], in [0, pi]
    Vector3d axis = Vector3d::UnitZ();       // unit; (0,0,1) for the zero rotation
};

/// Axis-angle of a unit quaternion with the angle folded into [0, pi].
/// q and -q yield identical results.
inline AxisAngle quaternion_to_axis_angle(const Quaterniond& q) {
    const Quaterniond c = canonical(q);
    const Vector3d v = c.vec();
    const double s = v.norm();
    AxisAngle out;
    if (s < 1e-15) {
        return out;
    }
    // atan2 keeps precision near both 0 and pi.
    out.angle = 2.0 * std::atan2(s, c.w());
    out.axis = v / s;
    return out;
}

inline Quaterniond axis_angle_to_quaternion(const AxisAngle& aa) {
    const double h = 0.5 * aa.angle;
    const Vector3d v = std::sin(h) * aa.axis.normalized();
    return Quaterniond(std::cos(h), v.x(), v.y(), v.z());
}

/// Rotation vector angle * axis.
inline Vector3d rotation_vector(const Quaterniond& q) {
    const AxisAngle aa = quaternion_to_axis_angle(q);
    return aa.angle * aa.axis;
}

/// Quaternion time derivative for an angular velocity given in the base frame:
/// qdot = 1/2 * (0, w) * q. Returned as a raw (x, y, z, w) vector.
inline Vector4d quaternion_derivative(const Vector3d& omega, const Quaterniond& q) {
    const Quaterniond w(0.0, omega.x(), omega.y(), omega.z());
    return 0.5 * (w * q).coeffs();
}

/// Rotation angle between two orientations, in [0, pi].
inline double angular_distance(const Quaterniond& a, const Quaterniond& b) {
    return quaternion_to_axis_angle(a.conjugate() * b).angle;
}

/// Rigid transform mapping child-frame coordinates into the parent frame.
struct Pose {
    Vector3d translation = Vector3d::Zero();
    Quaterniond rotation = Quaterniond::Identity();

    Pose() = default;
    Pose(const Vector3d& t, const Quaterniond& q) : translation(t), rotation(q) {}

    static Pose identity() { return {}; }
    static Pose from_translation(const Vector3d& t) { return {t, Quaterniond::Identity()}; }
    static Pose from_rotation(const Quaterniond& q) { return {Vector3d::Zero(), q}; }

    Vector3d transform_point(const Vector3d& p) const { return rotation * p + translation; }

    Matrix4d matrix() const {
        Matrix4d m = Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation.toRotationMatrix();
        m.topRightCorner<3, 1>() = translation;
        return m;
    }

    /// Rebuilds a pose from a homogeneous matrix; the rotation block is assumed orthonormal.
    static Pose from_matrix(const Matrix4d& m) {
        const Matrix3d r = m.topLeftCorner<3, 3>();
        return {m.topRightCorner<3, 1>(), Quaterniond(r).normalized()};
    }
};

/// a * b, i.e. T(a) T(b).
inline Pose compose(const Pose& a, const Pose& b) {
    return {a.rotation * b.translation + a.translation, a.rotation * b.rotation};
}

inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

inline Pose inverse(const Pose& p) {
    const Quaterniond qi = p.rotation.conjugate();
    return {-(qi * p.translation), qi};
}

/// Rotation of `angle` about `axis` (need not be normalized).
inline Quaterniond rotation_about(const Vector3d& axis, double angle) {
    return Quaterniond(Eigen::AngleAxisd(angle, axis.normalized()));
}

}  // namespace teleskill
