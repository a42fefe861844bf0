#pragma once

// Simplified dynamic movement primitives on end-effector states.
//
// A skill is a recorded state trajectory expressed relative to the pose at
// which recording started, together with the per-sample forcing terms that
// make the spring-damper transformation system
//
//     sdd = D (K (g - s) - sd) + f
//
// reproduce it. Generation integrates the same system towards a goal chosen by
// the skill type and maps the result back into the robot base frame. The time
// scale is fixed to one and there is no phase variable or basis expansion:
// integration always runs at the recording step and the playback duration is
// applied afterwards by assigning timestamps.

#include "teleskill/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace teleskill {

/// [x y z q_x q_y q_z q_w g]
using StateVector = Eigen::Matrix<double, 8, 1>;
using StateSequence = std::vector<StateVector>;

class SkillError : public Error {
public:
    using Error::Error;
};

class DegenerateSkillError : public SkillError {
public:
    using SkillError::SkillError;
};

class TooFewSamplesError : public SkillError {
public:
    using SkillError::SkillError;
};

class IntegrationDivergenceError : public SkillError {
public:
    using SkillError::SkillError;
};

enum class SkillType { Local, Global, Hybrid };

inline std::string to_string(SkillType type) {
    switch (type) {
        case SkillType::Local: return "local";
        case SkillType::Global: return "global";
        case SkillType::Hybrid: return "hybrid";
    }
    return "local";
}

inline std::optional<SkillType> parse_skill_type(const std::string& s) {
    if (s == "local") return SkillType::Local;
    if (s == "global") return SkillType::Global;
    if (s == "hybrid") return SkillType::Hybrid;
    return std::nullopt;
}

inline constexpr int kMinSkillSamples = 7;
inline constexpr int kSkillFileVersion = 1;

inline StateVector make_state(const Pose& pose, double gripper) {
    StateVector s;
    s.head<3>() = pose.translation;
    s.segment<4>(3) = to_xyzw(pose.rotation);
    s[7] = gripper;
    return s;
}

/// Pose encoded in a state; the quaternion part is normalized.
inline Pose state_pose(const StateVector& s) {
    return {s.head<3>(), normalize(Vector4d(s.segment<4>(3)))};
}

inline StateVector identity_state(double gripper) { return make_state(Pose::identity(), gripper); }

/// Diagonal stiffness and damping of the transformation system.
struct SpringDamper {
    StateVector stiffness = StateVector::Constant(0.55);
    StateVector damping = StateVector::Constant(3.5);
};

struct SkillRecording {
    int version = kSkillFileVersion;
    std::string name;
    std::string created_at;
    double dt_rec = 0.01;
    StateSequence states;          // skill frame, states[0] = identity
    StateSequence forcing;         // same length as states
    SpringDamper gains;            // used for extraction
    StateVector final_base_state;  // last recorded state in the base frame

    std::size_t intervals() const { return states.empty() ? 0 : states.size() - 1; }
    double duration() const { return dt_rec * static_cast<double>(intervals()); }
    const StateVector& local_goal() const { return states.back(); }

    /// Base-frame pose where recording started, recovered from the final
    /// base state and the local goal.
    Pose recorded_start_pose() const { return state_pose(final_base_state) * inverse(state_pose(local_goal())); }

    void validate() const {
        if (states.size() < 2) {
            throw SkillError("skill '" + name + "' has fewer than two states");
        }
        if (states.size() != forcing.size()) {
            throw SkillError("skill '" + name + "': state and forcing sequences differ in length");
        }
        if (!(dt_rec > 0.0)) {
            throw SkillError("skill '" + name + "': sample step must be positive");
        }
        if (!(gains.stiffness.array() > 0.0).all() || !(gains.damping.array() > 0.0).all()) {
            throw SkillError("skill '" + name + "': stiffness and damping must be positive");
        }
    }
};

/// Forward-kinematics state of the arm, packed as [x y z q g] in the base frame.
inline StateVector record_sample(const ChainModel& chain, const JointVector& q, double gripper) {
    return make_state(forward_kinematics(chain, q), gripper);
}

/// Re-expresses every state relative to the first one: s_n <- T^-1(s_0) T(s_n).
/// The gripper channel is copied. Quaternion signs are chosen to stay in the
/// hemisphere of the previous sample so the components form a continuous curve.
inline StateSequence to_skill_frame(const StateSequence& states) {
    if (states.empty()) {
        throw SkillError("cannot normalize an empty state sequence");
    }
    const Pose start_inv = inverse(state_pose(states.front()));
    StateSequence out;
    out.reserve(states.size());
    out.push_back(identity_state(states.front()[7]));
    for (std::size_t n = 1; n < states.size(); ++n) {
        StateVector s = make_state(start_inv * state_pose(states[n]), states[n][7]);
        if (s.segment<4>(3).dot(out.back().segment<4>(3)) < 0.0) {
            s.segment<4>(3) = -s.segment<4>(3);
        }
        out.push_back(s);
    }
    return out;
}

/// Five-step smoothing differentiator, weights (5, 4, 1) / 32 dt over the
/// +-1, +-2, +-3 neighbours. Indices outside [0, N] are clamped to the ends.
inline StateSequence differentiate(const StateSequence& states, double dt) {
    if (!(dt > 0.0)) {
        throw SkillError("differentiation step must be positive");
    }
    const long last = static_cast<long>(states.size()) - 1;
    auto at = [&](long i) -> const StateVector& { return states[static_cast<std::size_t>(std::clamp(i, 0L, last))]; };
    StateSequence out(states.size());
    for (long n = 0; n <= last; ++n) {
        out[static_cast<std::size_t>(n)] =
            (5.0 * (at(n + 1) - at(n - 1)) + 4.0 * (at(n + 2) - at(n - 2)) + (at(n + 3) - at(n - 3))) / (32.0 * dt);
    }
    return out;
}

/// f_n = sdd_n - D (K (g - s_n) - sd_n)
inline StateSequence extract_forcing(const StateSequence& states, const StateSequence& velocities,
                                     const StateSequence& accelerations, const StateVector& goal,
                                     const SpringDamper& gains) {
    if (states.size() != velocities.size() || states.size() != accelerations.size()) {
        throw SkillError("forcing extraction: sequence lengths differ");
    }
    StateSequence f(states.size());
    for (std::size_t n = 0; n < states.size(); ++n) {
        f[n] = accelerations[n] -
               gains.damping.cwiseProduct(gains.stiffness.cwiseProduct(goal - states[n]) - velocities[n]);
    }
    return f;
}

/// Full recording pipeline: skill frame, two differentiations, forcing
/// extraction against the skill's own final state.
inline SkillRecording build_skill(const StateSequence& base_states, double dt_rec, const SpringDamper& gains,
                                  std::string name = {}, std::string created_at = {}) {
    if (base_states.size() < static_cast<std::size_t>(kMinSkillSamples)) {
        throw TooFewSamplesError("a skill needs at least " + std::to_string(kMinSkillSamples) + " samples, got " +
                                 std::to_string(base_states.size()));
    }
    if (!(dt_rec > 0.0)) {
        throw SkillError("sample step must be positive");
    }
    SkillRecording skill;
    skill.name = std::move(name);
    skill.created_at = std::move(created_at);
    skill.dt_rec = dt_rec;
    skill.gains = gains;
    skill.states = to_skill_frame(base_states);
    const StateSequence vel = differentiate(skill.states, dt_rec);
    const StateSequence acc = differentiate(vel, dt_rec);
    skill.forcing = extract_forcing(skill.states, vel, acc, skill.local_goal(), gains);
    skill.final_base_state = make_state(state_pose(base_states.back()), base_states.back()[7]);
    return skill;
}

namespace detail {

inline StateVector global_goal(const SkillRecording& skill, const StateVector& start) {
    StateVector g = make_state(inverse(state_pose(start)) * state_pose(skill.final_base_state), skill.final_base_state[7]);
    if (g[6] < 0.0) {
        g.segment<4>(3) = -g.segment<4>(3);
    }
    return g;
}

inline constexpr double kDegenerateTranslation = 1e-6;

}  // namespace detail

/// Goal in the skill frame for the given type and start state s*.
///   local:  the skill's final state.
///   global: T^-1(s*) T(final base state).
///   hybrid: the local goal with its translation stretched to the length of
///           the global goal's translation.
inline StateVector compute_goal(const SkillRecording& skill, SkillType type, const StateVector& start) {
    const StateVector& g_local = skill.local_goal();
    if (type == SkillType::Local) {
        return g_local;
    }
    const StateVector g_global = detail::global_goal(skill, start);
    if (type == SkillType::Global) {
        return g_global;
    }
    const double len_local = g_local.head<3>().norm();
    if (len_local < detail::kDegenerateTranslation) {
        throw DegenerateSkillError("hybrid skill '" + skill.name + "' has no net translation");
    }
    StateVector g = g_local;
    g.head<3>() *= g_global.head<3>().norm() / len_local;
    return g;
}

/// ||x_G|| / ||x_L||, the factor applied to the translational forcing along
/// the goal direction. Local skills, and skills or goals without net
/// translation, use 1.
inline double scale_ratio(const SkillRecording& skill, SkillType type, const StateVector& start) {
    if (type == SkillType::Local) {
        return 1.0;
    }
    const double len_local = skill.local_goal().head<3>().norm();
    if (len_local < detail::kDegenerateTranslation) {
        return 1.0;
    }
    const double len_global = detail::global_goal(skill, start).head<3>().norm();
    if (len_global < 1e-9) {
        return 1.0;   // no goal direction to rescale along
    }
    return len_global / len_local;
}

/// Splits the translational forcing into parts parallel and orthogonal to
/// `direction` and scales the parallel part by `ratio`.
inline StateVector rescale_forcing(const StateVector& f, const Vector3d& direction, double ratio) {
    const double dd = direction.dot(direction);
    if (ratio == 1.0 || dd < 1e-18) {
        return f;
    }
    StateVector out = f;
    const Vector3d ft = f.head<3>();
    const Vector3d parallel = (ft.dot(direction) / dd) * direction;
    const Vector3d orthogonal = ft - parallel;
    out.head<3>() = orthogonal + ratio * parallel;
    return out;
}

/// Forward-Euler integration of the transformation system from the skill
/// frame origin at rest, one step per recorded sample at the recording step.
/// The gripper channel starts at `start_gripper` (the recorded initial opening
/// by default). Quaternion components are normalized once the loop is done.
inline StateSequence generate(const SkillRecording& skill, const StateVector& goal, double ratio,
                              std::optional<double> start_gripper = std::nullopt) {
    skill.validate();
    if (!(ratio > 0.0) || !std::isfinite(ratio)) {
        throw SkillError("forcing scale ratio must be positive");
    }
    const std::size_t count = skill.states.size();
    const double dt = skill.dt_rec;
    const Vector3d direction = goal.head<3>();
    const StateVector& k = skill.gains.stiffness;
    const StateVector& d = skill.gains.damping;

    StateSequence out;
    out.reserve(count);
    StateVector s = identity_state(start_gripper.value_or(skill.states.front()[7]));
    StateVector v = StateVector::Zero();
    out.push_back(s);
    for (std::size_t n = 1; n < count; ++n) {
        const StateVector f = rescale_forcing(skill.forcing[n], direction, ratio);
        const StateVector a = d.cwiseProduct(k.cwiseProduct(goal - s) - v) + f;
        v += a * dt;
        s += v * dt;
        if (!s.allFinite()) {
            throw IntegrationDivergenceError("trajectory generation diverged at step " + std::to_string(n));
        }
        out.push_back(s);
    }
    for (StateVector& state : out) {
        state.segment<4>(3) = to_xyzw(normalize(Vector4d(state.segment<4>(3))));
    }
    return out;
}

struct HybridRotation {
    Quaterniond rotation = Quaterniond::Identity();
    bool antiparallel = false;   // axis was undefined and chosen arbitrarily
};

/// Rotation R (in the start frame) that turns the local goal's translation
/// direction onto the global goal's. With T1 = T^-1(g_L), T2 = T^-1(g_G) and
/// x1, x2 their translations, the recorded start is swung about x1 x x2 onto
/// the direction of x2; R is the rotational part of T(g_G) Rot(alpha, a) T1.
inline HybridRotation hybrid_rotation(const StateVector& goal_local, const StateVector& goal_global) {
    const Pose t1 = inverse(state_pose(goal_local));
    const Pose t2 = inverse(state_pose(goal_global));
    const Vector3d& x1 = t1.translation;
    const Vector3d& x2 = t2.translation;
    const double n1 = x1.norm();
    const double n2 = x2.norm();
    if (n1 < detail::kDegenerateTranslation || n2 < detail::kDegenerateTranslation) {
        throw DegenerateSkillError("hybrid rotation undefined for a goal without translation");
    }
    HybridRotation out;
    const Vector3d axis = x1.cross(x2);
    const double cos_alpha = std::clamp(x1.dot(x2) / (n1 * n2), -1.0, 1.0);
    Quaterniond swing = Quaterniond::Identity();
    if (axis.norm() > 1e-12 * n1 * n2) {
        swing = rotation_about(axis, std::acos(cos_alpha));
    } else if (cos_alpha < 0.0) {
        // Any axis orthogonal to x1 works; take the one closest to a base axis.
        Eigen::Index i = 0;
        x1.cwiseAbs().minCoeff(&i);
        swing = rotation_about(x1.cross(Vector3d::Unit(i)), kPi);
        out.antiparallel = true;
    }
    const Pose t_h = Pose::from_rotation(swing) * t1;
    out.rotation = (state_pose(goal_global) * t_h).rotation.normalized();
    return out;
}

/// s_n <- T(s*) T(s_n). With a pre-rotation R (hybrid skills) each state's
/// translation is first rotated by R while its orientation stays as generated,
/// so the path bends towards the global goal and the execution starts exactly
/// at s*. The gripper channel is copied.
inline StateSequence to_base_frame(const StateSequence& states, const StateVector& start,
                                   const std::optional<Quaterniond>& pre_rotation = std::nullopt) {
    const Pose start_pose = state_pose(start);
    StateSequence out;
    out.reserve(states.size());
    for (const StateVector& s : states) {
        Pose p = state_pose(s);
        if (pre_rotation) {
            p.translation = (*pre_rotation) * p.translation;
        }
        out.push_back(make_state(start_pose * p, s[7]));
    }
    return out;
}

struct GeneratedTrajectory {
    StateSequence states;    // base frame
    double duration = 0.0;   // T [s]

    std::size_t intervals() const { return states.empty() ? 0 : states.size() - 1; }
    double playback_step() const { return duration / static_cast<double>(intervals()); }
    double timestamp(std::size_t n) const { return static_cast<double>(n) * playback_step(); }
};

/// State for timestamp t: s_n with n = floor(t / (T/N)) for t < T, s_N
/// afterwards. The gripper is clamped to [0, 1].
inline StateVector sample_at(const GeneratedTrajectory& traj, double t) {
    if (traj.states.empty()) {
        throw SkillError("cannot sample an empty trajectory");
    }
    if (!(t >= 0.0)) {
        throw SkillError("sample time must be non-negative");
    }
    const std::size_t last = traj.intervals();
    std::size_t n = last;
    if (t < traj.duration) {
        n = std::min(last, static_cast<std::size_t>(std::floor(t / traj.playback_step())));
    }
    StateVector s = traj.states[n];
    s[7] = std::clamp(s[7], 0.0, 1.0);
    return s;
}

/// Goal, forcing scale and optional hybrid rotation for one execution.
struct ExecutionPlan {
    StateVector goal;
    double ratio = 1.0;
    std::optional<Quaterniond> pre_rotation;
    bool antiparallel = false;
};

inline ExecutionPlan plan_execution(const SkillRecording& skill, SkillType type, const StateVector& start) {
    ExecutionPlan plan;
    plan.goal = compute_goal(skill, type, start);
    plan.ratio = scale_ratio(skill, type, start);
    if (type == SkillType::Hybrid) {
        const HybridRotation r = hybrid_rotation(skill.local_goal(), detail::global_goal(skill, start));
        plan.pre_rotation = r.rotation;
        plan.antiparallel = r.antiparallel;
    }
    return plan;
}

/// Complete generation: goal, integration, base-frame transform and timing.
/// Any warning (hybrid antiparallel fallback) is appended to `warnings`.
inline GeneratedTrajectory generate_trajectory(const SkillRecording& skill, SkillType type, const StateVector& start,
                                               double duration, std::vector<std::string>* warnings = nullptr) {
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw SkillError("playback duration must be positive");
    }
    const ExecutionPlan plan = plan_execution(skill, type, start);
    if (plan.antiparallel && warnings) {
        warnings->push_back("hybrid goal points opposite to the recorded motion; rotating by pi about an arbitrary axis");
    }
    GeneratedTrajectory traj;
    traj.states = to_base_frame(generate(skill, plan.goal, plan.ratio, start[7]), start, plan.pre_rotation);
    traj.duration = duration;
    return traj;
}

}  // namespace teleskill
