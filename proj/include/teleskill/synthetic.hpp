#pragma once

// Deterministic synthetic recordings and start-pose sets. They stand in for
// demonstrations recorded on hardware: base-frame state sequences sampled on
// a fixed grid, ready for build_skill().

#include "teleskill/skills.hpp"

#include <random>
#include <vector>

namespace teleskill::synthetic {

/// Minimum-jerk profile on u in [0, 1] and its first two derivatives (per u).
inline double minimum_jerk(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}
inline double minimum_jerk_velocity(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return 30.0 * u * u * (1.0 - u) * (1.0 - u);
}
inline double minimum_jerk_acceleration(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return 60.0 * u - 180.0 * u * u + 120.0 * u * u * u;
}

struct HelixSpec {
    Pose start = Pose(Vector3d(0.4, 0.1, 0.5), Quaterniond(Eigen::AngleAxisd(0.3, Vector3d(1, 2, 3).normalized())));
    double radius = 0.05;   // [m]
    double turns = 2.0;
    double rise = 0.1;      // [m] along the start frame's z
    double yaw = 0.5;       // [rad] total rotation about z
    double roll = 0.3;      // [rad] peak wobble about x
    double duration = 10.0; // [s]
    double rate = 100.0;    // [Hz]
};

/// Helix in the start frame with minimum-jerk timing; the gripper closes
/// from 0 to 1 along the same profile. duration * rate intervals.
inline StateSequence helix(const HelixSpec& h) {
    const int n_int = static_cast<int>(std::lround(h.duration * h.rate));
    StateSequence out;
    out.reserve(static_cast<std::size_t>(n_int) + 1);
    for (int n = 0; n <= n_int; ++n) {
        const double u = minimum_jerk(static_cast<double>(n) / n_int);
        const double a = 2.0 * kPi * h.turns * u;
        const Vector3d p(h.radius * (std::cos(a) - 1.0), h.radius * std::sin(a), h.rise * u);
        const Quaterniond q(Eigen::AngleAxisd(h.yaw * u, Vector3d::UnitZ()) *
                            Eigen::AngleAxisd(h.roll * std::sin(kPi * u), Vector3d::UnitX()));
        out.push_back(make_state(h.start * Pose(p, q), u));
    }
    return out;
}

struct ArcSpec {
    Pose start = Pose(Vector3d(0.35, -0.15, 0.45), Quaterniond(Eigen::AngleAxisd(kPi, Vector3d::UnitX())));
    Vector3d displacement = Vector3d(0.0, 0.3, 0.0);   // [m] start frame
    double lift = 0.1;      // [m] peak height of the arc, along -z of the start frame (up for a flipped tool)
    double sway = 0.03;     // [m] lateral S-curve amplitude
    double yaw = 0.6;       // [rad] about the tool z axis
    double duration = 10.0;
    double rate = 100.0;
};

/// Pick-and-place style arc: straight displacement with a lift and a small
/// S-shaped sway, yaw rotation, gripper closing early and opening late.
inline StateSequence arc(const ArcSpec& s) {
    const int n_int = static_cast<int>(std::lround(s.duration * s.rate));
    const Vector3d dir = s.displacement.normalized();
    Vector3d side = Vector3d::UnitZ().cross(dir);
    if (side.norm() < 1e-9) {
        side = Vector3d::UnitX();
    }
    side.normalize();
    StateSequence out;
    out.reserve(static_cast<std::size_t>(n_int) + 1);
    for (int n = 0; n <= n_int; ++n) {
        const double tau = static_cast<double>(n) / n_int;
        const double u = minimum_jerk(tau);
        const Vector3d p = s.displacement * u - Vector3d::UnitZ() * (s.lift * std::sin(kPi * u)) +
                           side * (s.sway * std::sin(2.0 * kPi * u));
        const Quaterniond q(Eigen::AngleAxisd(s.yaw * u, Vector3d::UnitZ()));
        const double g = minimum_jerk(4.0 * tau) - minimum_jerk(4.0 * tau - 3.0);
        out.push_back(make_state(s.start * Pose(p, q), g));
    }
    return out;
}

/// `count` start states around `reference`: translation offsets of length
/// uniform in [min_offset, max_offset] along random directions, rotations by
/// an angle uniform in [0, max_angle] about random axes applied in the base
/// frame. The gripper value is copied. Seeded mt19937.
inline StateSequence seeded_starts(const StateVector& reference, int count, double min_offset, double max_offset,
                                   double max_angle, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto direction = [&] {
        Vector3d d;
        do {
            d = Vector3d(gauss(rng), gauss(rng), gauss(rng));
        } while (d.norm() < 1e-6);
        return d.normalized();
    };
    const Pose ref = state_pose(reference);
    StateSequence out;
    for (int i = 0; i < count; ++i) {
        const Vector3d offset = direction() * (min_offset + (max_offset - min_offset) * unit(rng));
        const Quaterniond r = rotation_about(direction(), max_angle * unit(rng));
        out.push_back(make_state(Pose(ref.translation + offset, r * ref.rotation), reference[7]));
    }
    return out;
}

inline double path_length(const StateSequence& states) {
    double len = 0.0;
    for (std::size_t n = 1; n < states.size(); ++n) {
        len += (states[n].head<3>() - states[n - 1].head<3>()).norm();
    }
    return len;
}

}  // namespace teleskill::synthetic
