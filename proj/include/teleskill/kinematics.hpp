#pragma once

// Six-revolute-joint serial chain: forward kinematics, geometric Jacobian and
// the joint-space inertia of the virtual model used by the IK solver.
//
// The virtual model is a set of point masses, one per link, plus an optional
// rigid body attached to the end-effector frame. Concentrating the virtual mass
// at the end-effector makes the Cartesian response of the IK solver nearly
// uniform across configurations, which is what the solver's convergence rate
// depends on.

#include "teleskill/geometry.hpp"

#include <array>
#include <optional>
#include <string>

namespace teleskill {

inline constexpr int kNumJoints = 6;

using JointVector = Eigen::Matrix<double, kNumJoints, 1>;

class ChainError : public Error {
public:
    using Error::Error;
};

struct Joint {
    Pose offset;                                 // parent frame -> joint frame at zero angle
    Vector3d axis = Vector3d::UnitZ();           // rotation axis in the joint frame
    double mass = 1.0;                           // virtual point mass of the link after this joint [kg]
    Vector3d mass_position = Vector3d::Zero();   // in the joint frame [m]
};

struct JointLimits {
    JointVector lower;
    JointVector upper;
};

struct ChainModel {
    std::array<Joint, kNumJoints> joints;
    Pose tool;                      // last joint frame -> end-effector frame E
    double tool_mass = 0.0;                // virtual body at E [kg]
    double tool_rotational_inertia = 0.0;  // isotropic, about E [kg m^2]
    double inertia_floor = 1e-3;           // diagonal regularization of the inertia matrix
    std::optional<JointLimits> limits;

    /// Throws ChainError when an invariant is violated.
    void validate() const {
        for (std::size_t i = 0; i < joints.size(); ++i) {
            const Joint& j = joints[i];
            const std::string tag = "joint " + std::to_string(i + 1);
            if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
                throw ChainError(tag + ": axis must be unit-norm");
            }
            if (!(j.mass > 0.0)) {
                throw ChainError(tag + ": virtual mass must be positive");
            }
            if (std::abs(j.offset.rotation.norm() - 1.0) > 1e-9) {
                throw ChainError(tag + ": offset rotation must be unit-norm");
            }
        }
        if (tool_mass < 0.0 || tool_rotational_inertia < 0.0) {
            throw ChainError("end-effector body must have non-negative mass and inertia");
        }
        if (!(inertia_floor > 0.0)) {
            throw ChainError("inertia floor must be positive");
        }
        if (limits && (limits->lower.array() > limits->upper.array()).any()) {
            throw ChainError("joint limits: lower bound above upper bound");
        }
    }

    /// Reference arm: six joints with alternating orthogonal axes (z y y z y z)
    /// and 0.3 m links. Light link masses and a 0.25 kg / 0.25 kg m^2 body at
    /// the end-effector keep the IK response well conditioned.
    static ChainModel default_arm() {
        ChainModel c;
        const double l = 0.3;
        const Vector3d z = Vector3d::UnitZ();
        const Vector3d y = Vector3d::UnitY();
        const std::array<Vector3d, kNumJoints> axes = {z, y, y, z, y, z};
        const std::array<Vector3d, kNumJoints> offsets = {
            Vector3d(0, 0, l), Vector3d(0, 0, 0), Vector3d(0, 0, l),
            Vector3d(0, 0, l), Vector3d(0, 0, l), Vector3d(0, 0, 0)};
        for (int i = 0; i < kNumJoints; ++i) {
            c.joints[i].offset = Pose::from_translation(offsets[i]);
            c.joints[i].axis = axes[i];
            c.joints[i].mass = 0.01;
            c.joints[i].mass_position = Vector3d(0.1, 0.1, 0.5 * l);
        }
        c.tool = Pose::from_translation(Vector3d(0, 0, l));
        c.tool_mass = 0.25;
        c.tool_rotational_inertia = 0.25;
        return c;
    }

    /// Upper bound on the distance between the first joint and the end-effector.
    double max_reach() const {
        double r = tool.translation.norm();
        for (int i = 1; i < kNumJoints; ++i) {
            r += joints[i].offset.translation.norm();
        }
        return r;
    }

    bool within_limits(const JointVector& q) const {
        if (!limits) {
            return true;
        }
        return (q.array() >= limits->lower.array()).all() && (q.array() <= limits->upper.array()).all();
    }
};

struct JointState {
    JointVector position = JointVector::Zero();
    JointVector velocity = JointVector::Zero();

    bool finite() const { return position.allFinite() && velocity.allFinite(); }
};

namespace detail {

// Joint frames after applying each joint angle, all in the base frame.
inline std::array<Pose, kNumJoints> joint_frames(const ChainModel& chain, const JointVector& q) {
    std::array<Pose, kNumJoints> frames;
    Pose f;
    for (int i = 0; i < kNumJoints; ++i) {
        const Joint& j = chain.joints[i];
        f = f * j.offset * Pose::from_rotation(Quaterniond(Eigen::AngleAxisd(q[i], j.axis)));
        frames[i] = f;
    }
    return frames;
}

}  // namespace detail

/// Pose of the end-effector frame E in the base frame B.
inline Pose forward_kinematics(const ChainModel& chain, const JointVector& q) {
    return detail::joint_frames(chain, q).back() * chain.tool;
}

/// Geometric Jacobian: column i is [a_i x (p_ee - p_i); a_i] in the base frame.
inline Matrix6d geometric_jacobian(const ChainModel& chain, const JointVector& q) {
    const auto frames = detail::joint_frames(chain, q);
    const Vector3d p_ee = (frames.back() * chain.tool).translation;
    Matrix6d jac;
    for (int i = 0; i < kNumJoints; ++i) {
        const Vector3d a = frames[i].rotation * chain.joints[i].axis;
        jac.block<3, 1>(0, i) = a.cross(p_ee - frames[i].translation);
        jac.block<3, 1>(3, i) = a;
    }
    return jac;
}

/// Joint-space inertia of the virtual model: sum over the link point masses of
/// m_k Jv_k^T Jv_k, plus the end-effector body J^T diag(m I, I_rot I) J, plus
/// inertia_floor on the diagonal. Symmetric positive definite.
inline Matrix6d joint_inertia(const ChainModel& chain, const JointVector& q) {
    const auto frames = detail::joint_frames(chain, q);
    Matrix6d h = Matrix6d::Zero();
    for (int k = 0; k < kNumJoints; ++k) {
        const Vector3d p_mass = frames[k].transform_point(chain.joints[k].mass_position);
        Eigen::Matrix<double, 3, kNumJoints> jv = Eigen::Matrix<double, 3, kNumJoints>::Zero();
        for (int i = 0; i <= k; ++i) {
            const Vector3d a = frames[i].rotation * chain.joints[i].axis;
            jv.col(i) = a.cross(p_mass - frames[i].translation);
        }
        h.noalias() += chain.joints[k].mass * jv.transpose() * jv;
    }
    if (chain.tool_mass > 0.0 || chain.tool_rotational_inertia > 0.0) {
        const Matrix6d jee = geometric_jacobian(chain, q);
        h.noalias() += chain.tool_mass * jee.topRows<3>().transpose() * jee.topRows<3>();
        h.noalias() += chain.tool_rotational_inertia * jee.bottomRows<3>().transpose() * jee.bottomRows<3>();
    }
    h = 0.5 * (h + h.transpose()).eval();
    h.diagonal().array() += chain.inertia_floor;
    return h;
}

}  // namespace teleskill
