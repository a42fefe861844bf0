#pragma once

// Forward-dynamics inverse kinematics.
//
// The Cartesian error between target and simulated end-effector is applied as
// a wrench f = Kp [dx; dr] to a virtual copy of the arm. Joint accelerations
// follow from qdd = H^-1 J^T f; positions and velocities are Euler-integrated
// with the simulated step and the velocity is damped by a constant factor each
// cycle. Iterating this closed loop drives the virtual arm onto the target.

#include "teleskill/kinematics.hpp"

#include <string>

namespace teleskill {

class IkDivergenceError : public Error {
public:
    IkDivergenceError(int iteration, const std::string& what)
        : Error("IK diverged at iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

struct IkConfig {
    Vector6d gains = Vector6d::Constant(10.0);   // diagonal of Kp, translation first
    double step = 0.01;                          // simulated step [s]
    double damping = 0.9;                        // velocity multiplier per step
    int max_iterations = 2000;
    double translation_tolerance = 1e-4;         // [m]
    double rotation_tolerance = 1e-3;            // [rad]

    void validate() const {
        if (!(gains.array() > 0.0).all()) {
            throw Error("IK gains must be positive");
        }
        if (!(step > 0.0)) {
            throw Error("IK step must be positive");
        }
        if (!(damping > 0.0 && damping < 1.0)) {
            throw Error("IK damping factor must lie in (0, 1)");
        }
        if (max_iterations < 0) {
            throw Error("IK iteration limit must be non-negative");
        }
        if (!(translation_tolerance > 0.0 && rotation_tolerance > 0.0)) {
            throw Error("IK tolerances must be positive");
        }
    }
};

struct IkResult {
    JointVector positions = JointVector::Zero();
    int iterations = 0;
    double translation_error = 0.0;
    double rotation_error = 0.0;
    bool converged = false;
};

/// [x_target - x_current; phi * axis] where (phi, axis) is the axis-angle of
/// q_target * q_current^-1 with phi in [0, pi]. Expressed in the base frame.
inline Vector6d pose_error(const Pose& target, const Pose& current) {
    Vector6d e;
    e.head<3>() = target.translation - current.translation;
    e.tail<3>() = rotation_vector(target.rotation * current.rotation.conjugate());
    return e;
}

class IkSolver {
public:
    IkSolver(ChainModel chain, IkConfig config) : chain_(std::move(chain)), config_(config) {
        chain_.validate();
        config_.validate();
    }

    const ChainModel& chain() const { return chain_; }
    const IkConfig& config() const { return config_; }

    /// Iterates from rest at `seed` until both tolerances hold or the iteration
    /// budget is spent.
    IkResult solve(const Pose& target, const JointVector& seed) const {
        if (!seed.allFinite()) {
            throw IkDivergenceError(0, "non-finite seed");
        }
        JointState state;
        state.position = seed;
        IkResult result;
        for (int it = 0;; ++it) {
            const Vector6d e = pose_error(target, forward_kinematics(chain_, state.position));
            result.translation_error = e.head<3>().norm();
            result.rotation_error = e.tail<3>().norm();
            result.iterations = it;
            if (result.translation_error < config_.translation_tolerance &&
                result.rotation_error < config_.rotation_tolerance) {
                result.converged = true;
                break;
            }
            if (it >= config_.max_iterations) {
                break;
            }
            integrate(state, e, it);
        }
        result.positions = state.position;
        return result;
    }

    /// Runs exactly `budget` iterations, carrying the velocity in `state`
    /// across calls. Used once per control cycle for streaming.
    JointState track(const Pose& target, JointState state, int budget) const {
        for (int it = 0; it < budget; ++it) {
            const Vector6d e = pose_error(target, forward_kinematics(chain_, state.position));
            integrate(state, e, it);
        }
        return state;
    }

private:
    void integrate(JointState& state, const Vector6d& error, int iteration) const {
        const Vector6d wrench = config_.gains.asDiagonal() * error;
        const Matrix6d jac = geometric_jacobian(chain_, state.position);
        const Matrix6d inertia = joint_inertia(chain_, state.position);
        const JointVector acc = inertia.llt().solve(jac.transpose() * wrench);
        state.position += state.velocity * config_.step;
        state.velocity += acc * config_.step;
        state.velocity *= config_.damping;
        if (!state.finite()) {
            throw IkDivergenceError(iteration, "non-finite joint state");
        }
    }

    ChainModel chain_;
    IkConfig config_;
};

}  // namespace teleskill
