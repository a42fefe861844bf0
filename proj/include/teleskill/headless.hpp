#pragma once

// Scripted drivers for the simulated robot without a network front end.

#include "teleskill/sim_robot.hpp"

#include <cmath>
#include <string>

namespace teleskill {

/// Control rate used for a headless recording at `record_rate`: the
/// configured rate when it is an integer multiple, otherwise the record rate.
inline double headless_control_rate(double control_rate, double record_rate) {
    const double k = control_rate / record_rate;
    return k >= 1.0 && std::abs(k - std::round(k)) < 1e-9 ? control_rate : record_rate;
}

/// Records `duration` seconds of the script from the robot's home pose. The
/// script time is the simulated time since recording started.
inline SkillRecording record_script(SimConfig config, const TwistScript& script, double record_rate, double duration,
                                    const std::string& name) {
    if (!(record_rate > 0.0) || !(duration > 0.0)) {
        throw SkillError("recording rate and duration must be positive");
    }
    const double samples = std::floor(duration * record_rate + 1e-9) + 1.0;
    if (samples < kMinSkillSamples) {
        throw TooFewSamplesError("recording of " + std::to_string(duration) + " s at " + std::to_string(record_rate) +
                                 " Hz yields fewer than " + std::to_string(kMinSkillSamples) + " samples");
    }
    config.record_rate = record_rate;
    config.control_rate = headless_control_rate(config.control_rate, record_rate);
    SimRobot robot(config);
    robot.start_recording();
    const long steps = std::lround(duration * config.control_rate);
    for (long k = 0; k < steps; ++k) {
        const TwistCommand cmd = script.command_at(static_cast<double>(k) * robot.step_size());
        robot.command_twist(cmd);
        robot.command_gripper(cmd.gripper_rate);
        robot.step();
        for (const RobotEvent& e : robot.take_events()) {
            if (e.level == RobotEvent::Level::Error) {
                throw Error("recording aborted: " + e.message);
            }
        }
    }
    return robot.stop_recording(name);
}

}  // namespace teleskill
