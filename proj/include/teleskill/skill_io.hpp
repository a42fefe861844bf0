#pragma once

// Skill files (JSON, versioned) and trajectory CSV export.

#include "teleskill/skills.hpp"

#include "json.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace teleskill {

class SkillFormatError : public SkillError {
public:
    using SkillError::SkillError;
};

namespace detail {

inline nlohmann::json to_json_array(const StateVector& v) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) {
        a.push_back(v[i]);
    }
    return a;
}

inline StateVector state_from_json(const nlohmann::json& a, const std::string& field) {
    if (!a.is_array() || a.size() != 8) {
        throw SkillFormatError("field '" + field + "' must be an array of 8 numbers");
    }
    StateVector v;
    for (int i = 0; i < 8; ++i) {
        if (!a[static_cast<std::size_t>(i)].is_number()) {
            throw SkillFormatError("field '" + field + "' must contain numbers only");
        }
        v[i] = a[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

inline StateSequence sequence_from_json(const nlohmann::json& a, const std::string& field) {
    if (!a.is_array()) {
        throw SkillFormatError("field '" + field + "' must be an array");
    }
    StateSequence out;
    out.reserve(a.size());
    for (const auto& row : a) {
        out.push_back(state_from_json(row, field));
    }
    return out;
}

}  // namespace detail

/// UTC timestamp in ISO-8601 form, used for `created_at`.
inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

inline nlohmann::json skill_to_json(const SkillRecording& skill) {
    nlohmann::json j;
    j["version"] = skill.version;
    j["name"] = skill.name;
    j["created_at"] = skill.created_at;
    j["dt_rec"] = skill.dt_rec;
    j["K"] = detail::to_json_array(skill.gains.stiffness);
    j["D"] = detail::to_json_array(skill.gains.damping);
    j["final_base_state"] = detail::to_json_array(skill.final_base_state);
    j["states"] = nlohmann::json::array();
    for (const auto& s : skill.states) {
        j["states"].push_back(detail::to_json_array(s));
    }
    j["forcing"] = nlohmann::json::array();
    for (const auto& f : skill.forcing) {
        j["forcing"].push_back(detail::to_json_array(f));
    }
    return j;
}

inline SkillRecording skill_from_json(const nlohmann::json& j) {
    for (const char* key : {"version", "name", "created_at", "dt_rec", "K", "D", "final_base_state", "states", "forcing"}) {
        if (!j.contains(key)) {
            throw SkillFormatError(std::string("missing field '") + key + "'");
        }
    }
    SkillRecording skill;
    try {
        skill.version = j.at("version").get<int>();
        skill.name = j.at("name").get<std::string>();
        skill.created_at = j.at("created_at").get<std::string>();
        skill.dt_rec = j.at("dt_rec").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw SkillFormatError(std::string("malformed skill header: ") + e.what());
    }
    if (skill.version != kSkillFileVersion) {
        throw SkillFormatError("unsupported skill file version " + std::to_string(skill.version));
    }
    skill.gains.stiffness = detail::state_from_json(j.at("K"), "K");
    skill.gains.damping = detail::state_from_json(j.at("D"), "D");
    skill.final_base_state = detail::state_from_json(j.at("final_base_state"), "final_base_state");
    skill.states = detail::sequence_from_json(j.at("states"), "states");
    skill.forcing = detail::sequence_from_json(j.at("forcing"), "forcing");
    try {
        skill.validate();
    } catch (const SkillError& e) {
        throw SkillFormatError(e.what());
    }
    return skill;
}

inline std::string serialize_skill(const SkillRecording& skill) { return skill_to_json(skill).dump(1) + "\n"; }

inline SkillRecording parse_skill(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SkillFormatError(std::string("skill file is not valid JSON: ") + e.what());
    }
    return skill_from_json(j);
}

inline void save_skill(const SkillRecording& skill, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write skill file " + path);
    }
    out << serialize_skill(skill);
}

inline SkillRecording load_skill(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open skill file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_skill(buf.str());
}

/// CSV with header `t,x,y,z,q_x,q_y,q_z,q_w,g`; t_n = n T / N.
inline void write_trajectory_csv(std::ostream& out, const GeneratedTrajectory& traj) {
    out << "t,x,y,z,q_x,q_y,q_z,q_w,g\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
        const StateVector& s = traj.states[n];
        out << traj.timestamp(n);
        for (int i = 0; i < 7; ++i) {
            out << ',' << s[i];
        }
        out << ',' << std::clamp(s[7], 0.0, 1.0) << '\n';
    }
}

inline void save_trajectory_csv(const GeneratedTrajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write trajectory file " + path);
    }
    write_trajectory_csv(out, traj);
}

/// Reads a CSV written by write_trajectory_csv back into timestamps and states.
inline std::pair<std::vector<double>, StateSequence> read_trajectory_csv(std::istream& in) {
    std::vector<double> times;
    StateSequence states;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ss, cell, ',')) {
            v.push_back(std::stod(cell));
        }
        if (v.size() != 9) {
            throw Error("trajectory CSV rows need 9 columns");
        }
        times.push_back(v[0]);
        states.push_back(Eigen::Map<const StateVector>(v.data() + 1));
    }
    return {times, states};
}

}  // namespace teleskill
