#pragma once

// Wire messages of the live service: one JSON object per WebSocket text frame.
//
// inbound : twist, gripper, record_start, record_stop, play, stop, list_skills
// outbound: state, skills, event

#include "teleskill/sim_robot.hpp"

#include "json.hpp"

#include <string>
#include <variant>
#include <vector>

namespace teleskill::protocol {

class ProtocolError : public Error {
public:
    using Error::Error;
};

struct Twist {
    Vector3d v = Vector3d::Zero();
    Vector3d w = Vector3d::Zero();
};
struct Gripper {
    double rate = 0.0;
};
struct RecordStart {};
struct RecordStop {
    std::string name;
};
struct Play {
    std::string name;
    SkillType type = SkillType::Local;
    double duration = 0.0;
};
struct Stop {};
struct ListSkills {};

using Command = std::variant<Twist, Gripper, RecordStart, RecordStop, Play, Stop, ListSkills>;

namespace detail {

inline Vector3d vec3(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) {
        return Vector3d::Zero();
    }
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3) {
        throw ProtocolError(std::string("'") + key + "' must be an array of 3 numbers");
    }
    Vector3d v(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    if (!v.allFinite()) {
        throw ProtocolError(std::string("'") + key + "' must be finite");
    }
    return v;
}

}  // namespace detail

inline Command parse_command(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        throw ProtocolError("message is not valid JSON");
    }
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
        throw ProtocolError("message needs a string 'type'");
    }
    const std::string type = j.at("type").get<std::string>();
    try {
        if (type == "twist") {
            return Twist{detail::vec3(j, "v"), detail::vec3(j, "w")};
        }
        if (type == "gripper") {
            return Gripper{j.value("rate", 0.0)};
        }
        if (type == "record_start") {
            return RecordStart{};
        }
        if (type == "record_stop") {
            return RecordStop{j.value("name", std::string())};
        }
        if (type == "play") {
            Play p;
            p.name = j.at("name").get<std::string>();
            const auto kind = parse_skill_type(j.value("skill_type", std::string("local")));
            if (!kind) {
                throw ProtocolError("unknown skill_type '" + j.value("skill_type", std::string()) + "'");
            }
            p.type = *kind;
            p.duration = j.at("duration").get<double>();
            return p;
        }
        if (type == "stop") {
            return Stop{};
        }
        if (type == "list_skills") {
            return ListSkills{};
        }
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError("malformed '" + type + "' message: " + e.what());
    }
    throw ProtocolError("unknown message type '" + type + "'");
}

inline std::string encode(const Command& cmd) {
    nlohmann::json j;
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, Twist>) {
                j = {{"type", "twist"}, {"v", {c.v.x(), c.v.y(), c.v.z()}}, {"w", {c.w.x(), c.w.y(), c.w.z()}}};
            } else if constexpr (std::is_same_v<T, Gripper>) {
                j = {{"type", "gripper"}, {"rate", c.rate}};
            } else if constexpr (std::is_same_v<T, RecordStart>) {
                j = {{"type", "record_start"}};
            } else if constexpr (std::is_same_v<T, RecordStop>) {
                j = {{"type", "record_stop"}, {"name", c.name}};
            } else if constexpr (std::is_same_v<T, Play>) {
                j = {{"type", "play"}, {"name", c.name}, {"skill_type", to_string(c.type)}, {"duration", c.duration}};
            } else if constexpr (std::is_same_v<T, Stop>) {
                j = {{"type", "stop"}};
            } else {
                j = {{"type", "list_skills"}};
            }
        },
        cmd);
    return j.dump();
}

inline std::string encode_state(const Snapshot& s) {
    nlohmann::json joints = nlohmann::json::array();
    for (int i = 0; i < kNumJoints; ++i) {
        joints.push_back(s.joints[i]);
    }
    const Vector4d q = to_xyzw(s.ee.rotation);
    nlohmann::json j = {
        {"type", "state"},
        {"t", s.t},
        {"joints", joints},
        {"ee", {{"pos", {s.ee.translation.x(), s.ee.translation.y(), s.ee.translation.z()}},
                {"quat", {q[0], q[1], q[2], q[3]}}}},
        {"gripper", s.gripper},
        {"mode", to_string(s.mode)},
    };
    return j.dump();
}

inline std::string encode_skills(const std::vector<std::string>& names) {
    return nlohmann::json{{"type", "skills"}, {"names", names}}.dump();
}

inline std::string encode_event(const RobotEvent& e) {
    nlohmann::json j = {{"type", "event"}, {"level", to_string(e.level)}, {"message", e.message}};
    if (!e.code.empty()) {
        j["code"] = e.code;
    }
    return j.dump();
}

inline std::string encode_error(const std::string& message) {
    return encode_event({RobotEvent::Level::Error, message, "error"});
}

}  // namespace teleskill::protocol
