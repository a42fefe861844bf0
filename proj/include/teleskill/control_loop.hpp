#pragma once

// Network-agnostic core of the live service: applies inbound protocol
// messages to the simulated robot and skill store, and produces the outbound
// messages for one control cycle. The transport layer only moves strings.

#include "teleskill/protocol.hpp"
#include "teleskill/sim_robot.hpp"
#include "teleskill/skill_store.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace teleskill {

struct Outbound {
    std::string text;
    std::optional<std::uint64_t> recipient;   // empty: every client
};

class ControlLoop {
public:
    explicit ControlLoop(SimConfig config) : robot_(config), store_(config.skill_dir) {}

    SimRobot& robot() { return robot_; }
    const SimRobot& robot() const { return robot_; }
    SkillStore& store() { return store_; }

    std::vector<Outbound> handle(std::uint64_t client, const std::string& text) {
        std::vector<Outbound> out;
        try {
            const protocol::Command cmd = protocol::parse_command(text);
            std::visit([&](const auto& c) { apply(client, c, out); }, cmd);
        } catch (const Error& e) {
            out.push_back({protocol::encode_error(e.what()), client});
        }
        flush_events(out);
        return out;
    }

    /// One control cycle: step the robot, forward its events and, every
    /// state_decimation cycles, the state snapshot.
    std::vector<Outbound> tick() {
        std::vector<Outbound> out;
        const Snapshot snap = robot_.step();
        flush_events(out);
        if (++cycle_ % static_cast<std::uint64_t>(robot_.config().state_decimation) == 0) {
            out.push_back({protocol::encode_state(snap), std::nullopt});
        }
        return out;
    }

private:
    void flush_events(std::vector<Outbound>& out) {
        for (const RobotEvent& e : robot_.take_events()) {
            out.push_back({protocol::encode_event(e), std::nullopt});
        }
    }

    void apply(std::uint64_t, const protocol::Twist& c, std::vector<Outbound>&) {
        TwistCommand cmd;
        cmd.linear = c.v;
        cmd.angular = c.w;
        robot_.command_twist(cmd);
    }

    void apply(std::uint64_t, const protocol::Gripper& c, std::vector<Outbound>&) {
        if (!std::isfinite(c.rate)) {
            throw protocol::ProtocolError("gripper rate must be finite");
        }
        robot_.command_gripper(c.rate);
    }

    void apply(std::uint64_t, const protocol::RecordStart&, std::vector<Outbound>& out) {
        robot_.start_recording();
        out.push_back({protocol::encode_event({RobotEvent::Level::Info, "recording started", "recording_started"}),
                       std::nullopt});
    }

    void apply(std::uint64_t, const protocol::RecordStop& c, std::vector<Outbound>& out) {
        const std::string name = c.name.empty() ? "skill" : c.name;
        if (!SkillStore::valid_name(name)) {
            throw SkillError("invalid skill name '" + name + "'");
        }
        SkillRecording skill = robot_.stop_recording(name);
        const std::size_t intervals = skill.intervals();
        const std::string saved = store_.save(std::move(skill));
        out.push_back({protocol::encode_event({RobotEvent::Level::Info,
                                               "recorded skill '" + saved + "' with " + std::to_string(intervals) +
                                                   " intervals",
                                               "skill_recorded"}),
                       std::nullopt});
        out.push_back({protocol::encode_skills(store_.list()), std::nullopt});
    }

    void apply(std::uint64_t, const protocol::Play& c, std::vector<Outbound>&) {
        if (!(c.duration > 0.0)) {
            throw SkillError("playback duration must be positive");
        }
        robot_.play(store_.load(c.name), c.type, c.duration);
    }

    void apply(std::uint64_t, const protocol::Stop&, std::vector<Outbound>&) { robot_.stop(); }

    void apply(std::uint64_t client, const protocol::ListSkills&, std::vector<Outbound>& out) {
        out.push_back({protocol::encode_skills(store_.list()), client});
    }

    SimRobot robot_;
    SkillStore store_;
    std::uint64_t cycle_ = 0;
};

}  // namespace teleskill
