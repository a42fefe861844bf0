#pragma once

// Simulated arm driven at a fixed control rate. Teleoperation integrates the
// latest twist into a target pose, recording samples the end-effector state on
// the recording grid, and playback streams a generated trajectory; in every
// mode the IK tracker turns the target into joint positions, which the
// simulated arm follows exactly. Time only advances through step().

#include "teleskill/ik_solver.hpp"
#include "teleskill/sim_config.hpp"
#include "teleskill/skill_io.hpp"
#include "teleskill/skills.hpp"
#include "teleskill/teleop.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace teleskill {

enum class Mode { Idle, Teleop, Recording, Playback };

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::Idle: return "idle";
        case Mode::Teleop: return "teleop";
        case Mode::Recording: return "recording";
        case Mode::Playback: return "playback";
    }
    return "idle";
}

class ModeError : public Error {
public:
    using Error::Error;
};

struct Snapshot {
    double t = 0.0;
    JointVector joints = JointVector::Zero();
    Pose ee;
    double gripper = 0.0;
    Mode mode = Mode::Idle;
};

struct RobotEvent {
    enum class Level { Info, Warning, Error };
    Level level = Level::Info;
    std::string message;
    std::string code;   // machine-readable tag, e.g. "playback_complete"
};

inline std::string to_string(RobotEvent::Level l) {
    switch (l) {
        case RobotEvent::Level::Info: return "info";
        case RobotEvent::Level::Warning: return "warning";
        case RobotEvent::Level::Error: return "error";
    }
    return "info";
}

class SimRobot {
public:
    explicit SimRobot(SimConfig config)
        : config_(std::move(config)), solver_(config_.chain, config_.ik), dt_(1.0 / config_.control_rate) {
        config_.validate();
        joints_.position = config_.home;
    }

    const SimConfig& config() const { return config_; }
    Mode mode() const { return mode_; }
    double time() const { return t_; }
    double step_size() const { return dt_; }
    const JointState& joints() const { return joints_; }
    double gripper() const { return gripper_; }
    Pose end_effector() const { return forward_kinematics(config_.chain, joints_.position); }
    StateVector current_state() const { return make_state(end_effector(), gripper_); }

    Snapshot snapshot() const { return {t_, joints_.position, end_effector(), gripper_, mode_}; }

    /// Latest twist wins. Enters teleop from idle.
    void command_twist(const TwistCommand& cmd) {
        if (mode_ == Mode::Playback) {
            throw ModeError("twist ignored during playback");
        }
        if (mode_ == Mode::Idle) {
            enter_teleop();
        }
        twist_.linear = cmd.linear;
        twist_.angular = cmd.angular;
    }

    void command_gripper(double rate) {
        if (mode_ == Mode::Playback) {
            throw ModeError("gripper command ignored during playback");
        }
        if (mode_ == Mode::Idle) {
            enter_teleop();
        }
        twist_.gripper_rate = rate;
    }

    void start_recording() {
        if (mode_ == Mode::Recording) {
            throw ModeError("already recording");
        }
        if (mode_ == Mode::Playback) {
            throw ModeError("cannot record during playback");
        }
        if (mode_ == Mode::Idle) {
            enter_teleop();
        }
        mode_ = Mode::Recording;
        samples_.clear();
        record_elapsed_ = 0.0;
        next_sample_ = 0;
        take_sample();
    }

    /// Leaves recording for teleop and turns the samples into a skill. Throws
    /// TooFewSamplesError (samples discarded) for recordings under 7 samples.
    SkillRecording stop_recording(const std::string& name) {
        if (mode_ != Mode::Recording) {
            throw ModeError("not recording");
        }
        mode_ = Mode::Teleop;
        StateSequence samples;
        samples.swap(samples_);
        return build_skill(samples, 1.0 / config_.record_rate, config_.skill_gains, name, utc_timestamp());
    }

    std::size_t recorded_samples() const { return samples_.size(); }

    /// Generates the trajectory from the current end-effector state and
    /// starts streaming it. Allowed from idle, or from teleop (via idle).
    void play(const SkillRecording& skill, SkillType type, double duration) {
        if (mode_ == Mode::Recording || mode_ == Mode::Playback) {
            throw ModeError("playback requires an idle robot (mode is " + to_string(mode_) + ")");
        }
        if (!(duration > 0.0)) {
            throw SkillError("playback duration must be positive");
        }
        std::vector<std::string> warnings;
        GeneratedTrajectory traj = generate_trajectory(skill, type, current_state(), duration, &warnings);
        for (auto& w : warnings) {
            emit(RobotEvent::Level::Warning, std::move(w));
        }
        enter_idle();
        trajectory_ = std::move(traj);
        playback_elapsed_ = 0.0;
        mode_ = Mode::Playback;
        emit(RobotEvent::Level::Info,
             "playing '" + skill.name + "' as " + to_string(type) + " skill over " + format_seconds(duration), "playback_started");
    }

    const std::optional<GeneratedTrajectory>& trajectory() const { return trajectory_; }

    /// Aborts teleop, recording or playback and returns to idle.
    void stop() {
        if (mode_ == Mode::Playback) {
            emit(RobotEvent::Level::Info, "playback stopped", "playback_stopped");
        } else if (mode_ == Mode::Recording) {
            samples_.clear();
            emit(RobotEvent::Level::Info, "recording discarded", "recording_discarded");
        }
        enter_idle();
    }

    Snapshot step() {
        t_ += dt_;
        try {
            switch (mode_) {
                case Mode::Idle:
                    break;
                case Mode::Teleop:
                case Mode::Recording:
                    step_teleop();
                    break;
                case Mode::Playback:
                    step_playback();
                    break;
            }
        } catch (const IkDivergenceError& e) {
            joints_.velocity.setZero();
            samples_.clear();
            enter_idle();
            emit(RobotEvent::Level::Error, e.what(), "ik_divergence");
        }
        return snapshot();
    }

    std::vector<RobotEvent> take_events() {
        std::vector<RobotEvent> out;
        out.swap(events_);
        return out;
    }

private:
    static std::string format_seconds(double s) {
        std::ostringstream out;
        out << s << " s";
        return out.str();
    }

    void emit(RobotEvent::Level level, std::string message, std::string code = {}) {
        events_.push_back({level, std::move(message), std::move(code)});
    }

    void enter_teleop() {
        teleop_.target = end_effector();
        teleop_.gripper = gripper_;
        twist_ = {};
        mode_ = Mode::Teleop;
    }

    void enter_idle() {
        mode_ = Mode::Idle;
        twist_ = {};
        joints_.velocity.setZero();
        trajectory_.reset();
    }

    void track(const Pose& target) {
        joints_ = solver_.track(target, joints_, config_.ik_iterations_per_cycle);
        if (config_.chain.limits) {
            joints_.position = joints_.position.cwiseMax(config_.chain.limits->lower).cwiseMin(config_.chain.limits->upper);
        }
    }

    void take_sample() {
        samples_.push_back(record_sample(config_.chain, joints_.position, gripper_));
        ++next_sample_;
    }

    void step_teleop() {
        teleop_ = advance(teleop_, clamp(twist_, config_.twist_limits), dt_);
        gripper_ = teleop_.gripper;
        track(teleop_.target);
        if (mode_ == Mode::Recording) {
            record_elapsed_ += dt_;
            const double dt_rec = 1.0 / config_.record_rate;
            while (record_elapsed_ + 1e-9 >= static_cast<double>(next_sample_) * dt_rec) {
                take_sample();
            }
        }
    }

    void step_playback() {
        playback_elapsed_ += dt_;
        const GeneratedTrajectory& traj = *trajectory_;
        const StateVector target = sample_at(traj, playback_elapsed_);
        gripper_ = target[7];
        const Pose target_pose = state_pose(target);
        track(target_pose);
        if (playback_elapsed_ + 1e-9 < traj.duration) {
            return;
        }
        const Vector6d e = pose_error(target_pose, end_effector());
        const bool settled = e.head<3>().norm() < 1e-3 && e.tail<3>().norm() < deg2rad(1.0);
        if (settled || playback_elapsed_ >= traj.duration + config_.settle_timeout) {
            if (!settled) {
                emit(RobotEvent::Level::Warning, "tracker did not settle on the final state");
            }
            enter_idle();
            emit(RobotEvent::Level::Info, "playback complete", "playback_complete");
        }
    }

    SimConfig config_;
    IkSolver solver_;
    double dt_;
    double t_ = 0.0;
    Mode mode_ = Mode::Idle;
    JointState joints_;
    double gripper_ = 0.0;

    TeleopState teleop_;
    TwistCommand twist_;

    StateSequence samples_;
    double record_elapsed_ = 0.0;
    long next_sample_ = 0;

    std::optional<GeneratedTrajectory> trajectory_;
    double playback_elapsed_ = 0.0;

    std::vector<RobotEvent> events_;
};

}  // namespace teleskill
