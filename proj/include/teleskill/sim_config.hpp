#pragma once

// Runtime configuration and its JSON file form.

#include "teleskill/ik_solver.hpp"
#include "teleskill/skills.hpp"
#include "teleskill/teleop.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace teleskill {

class ConfigError : public Error {
public:
    using Error::Error;
};

struct SimConfig {
    ChainModel chain = ChainModel::default_arm();
    IkConfig ik;
    int ik_iterations_per_cycle = 40;
    double control_rate = 100.0;   // [Hz]
    double record_rate = 100.0;    // [Hz]
    TwistLimits twist_limits;
    SpringDamper skill_gains;
    JointVector home = (JointVector() << 0.0, -0.4, 1.2, 0.0, 0.8, 0.0).finished();
    double settle_timeout = 5.0;   // [s] beyond T before playback is declared complete anyway
    std::string skill_dir = "skills";
    std::string static_dir;        // UI assets; empty disables static serving
    std::string bind_address = "127.0.0.1";
    int port = 8700;
    int state_decimation = 1;      // broadcast every n-th snapshot
    double time_scale = 1.0;       // simulated seconds per wall second; <= 0 runs unthrottled

    void validate() const {
        chain.validate();
        ik.validate();
        if (ik_iterations_per_cycle < 1) {
            throw ConfigError("ik.iterations_per_cycle must be at least 1");
        }
        if (!(control_rate > 0.0) || !(record_rate > 0.0)) {
            throw ConfigError("control and record rates must be positive");
        }
        if (!(skill_gains.stiffness.array() > 0.0).all() || !(skill_gains.damping.array() > 0.0).all()) {
            throw ConfigError("skill stiffness and damping must be positive");
        }
        if (port < 0 || port > 65535) {
            throw ConfigError("port out of range");
        }
        if (state_decimation < 1) {
            throw ConfigError("state_decimation must be at least 1");
        }
        if (!home.allFinite()) {
            throw ConfigError("home configuration must be finite");
        }
    }
};

namespace detail {

template <int N>
Eigen::Matrix<double, N, 1> vector_from_json(const nlohmann::json& j, const std::string& field) {
    Eigen::Matrix<double, N, 1> v;
    if (j.is_number()) {
        v.setConstant(j.get<double>());
        return v;
    }
    if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) {
        throw ConfigError("'" + field + "' must be a number or an array of " + std::to_string(N) + " numbers");
    }
    for (int i = 0; i < N; ++i) {
        v[i] = j[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

template <typename Derived>
nlohmann::json vector_to_json(const Eigen::MatrixBase<Derived>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back(v[i]);
    }
    return a;
}

inline Pose pose_from_json(const nlohmann::json& j, const std::string& field) {
    Pose p;
    if (j.contains("translation")) {
        p.translation = vector_from_json<3>(j.at("translation"), field + ".translation");
    }
    if (j.contains("rotation")) {
        p.rotation = normalize(vector_from_json<4>(j.at("rotation"), field + ".rotation"));
    }
    return p;
}

inline nlohmann::json pose_to_json(const Pose& p) {
    return {{"translation", vector_to_json(p.translation)}, {"rotation", vector_to_json(to_xyzw(p.rotation))}};
}

}  // namespace detail

/// Chain description: six joints, each an offset pose (rotation as x, y, z, w),
/// a rotation axis and a virtual point mass; a tool pose and optional
/// end-effector body, inertia floor and joint limits.
inline ChainModel chain_from_json(const nlohmann::json& j) {
    ChainModel c;
    try {
        const auto& joints = j.at("joints");
        if (!joints.is_array() || joints.size() != kNumJoints) {
            throw ConfigError("chain needs exactly " + std::to_string(kNumJoints) + " joints");
        }
        for (int i = 0; i < kNumJoints; ++i) {
            const auto& jj = joints[static_cast<std::size_t>(i)];
            const std::string tag = "joints[" + std::to_string(i) + "]";
            Joint& joint = c.joints[static_cast<std::size_t>(i)];
            joint.offset = jj.contains("offset") ? detail::pose_from_json(jj.at("offset"), tag + ".offset") : Pose{};
            joint.axis = detail::vector_from_json<3>(jj.at("axis"), tag + ".axis");
            joint.mass = jj.value("mass", 1.0);
            if (jj.contains("mass_position")) {
                joint.mass_position = detail::vector_from_json<3>(jj.at("mass_position"), tag + ".mass_position");
            }
        }
        if (j.contains("tool")) {
            c.tool = detail::pose_from_json(j.at("tool"), "tool");
        }
        c.tool_mass = j.value("tool_mass", 0.0);
        c.tool_rotational_inertia = j.value("tool_rotational_inertia", 0.0);
        c.inertia_floor = j.value("inertia_floor", 1e-3);
        if (j.contains("limits")) {
            JointLimits lim;
            lim.lower = detail::vector_from_json<kNumJoints>(j.at("limits").at("lower"), "limits.lower");
            lim.upper = detail::vector_from_json<kNumJoints>(j.at("limits").at("upper"), "limits.upper");
            c.limits = lim;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed chain description: ") + e.what());
    }
    c.validate();
    return c;
}

inline nlohmann::json chain_to_json(const ChainModel& c) {
    nlohmann::json j;
    j["joints"] = nlohmann::json::array();
    for (const Joint& joint : c.joints) {
        j["joints"].push_back({{"offset", detail::pose_to_json(joint.offset)},
                               {"axis", detail::vector_to_json(joint.axis)},
                               {"mass", joint.mass},
                               {"mass_position", detail::vector_to_json(joint.mass_position)}});
    }
    j["tool"] = detail::pose_to_json(c.tool);
    j["tool_mass"] = c.tool_mass;
    j["tool_rotational_inertia"] = c.tool_rotational_inertia;
    j["inertia_floor"] = c.inertia_floor;
    if (c.limits) {
        j["limits"] = {{"lower", detail::vector_to_json(c.limits->lower)},
                       {"upper", detail::vector_to_json(c.limits->upper)}};
    }
    return j;
}

inline SimConfig config_from_json(const nlohmann::json& j) {
    SimConfig cfg;
    try {
        if (j.contains("chain")) {
            cfg.chain = chain_from_json(j.at("chain"));
        }
        if (j.contains("ik")) {
            const auto& ik = j.at("ik");
            if (ik.contains("gains")) cfg.ik.gains = detail::vector_from_json<6>(ik.at("gains"), "ik.gains");
            cfg.ik.step = ik.value("step", cfg.ik.step);
            cfg.ik.damping = ik.value("damping", cfg.ik.damping);
            cfg.ik.max_iterations = ik.value("max_iterations", cfg.ik.max_iterations);
            cfg.ik.translation_tolerance = ik.value("translation_tolerance", cfg.ik.translation_tolerance);
            cfg.ik.rotation_tolerance = ik.value("rotation_tolerance", cfg.ik.rotation_tolerance);
            cfg.ik_iterations_per_cycle = ik.value("iterations_per_cycle", cfg.ik_iterations_per_cycle);
        }
        if (j.contains("teleop")) {
            const auto& t = j.at("teleop");
            cfg.twist_limits.linear = t.value("max_linear", cfg.twist_limits.linear);
            cfg.twist_limits.angular = t.value("max_angular", cfg.twist_limits.angular);
            cfg.twist_limits.gripper = t.value("max_gripper", cfg.twist_limits.gripper);
        }
        if (j.contains("skill_gains")) {
            const auto& g = j.at("skill_gains");
            if (g.contains("K")) cfg.skill_gains.stiffness = detail::vector_from_json<8>(g.at("K"), "skill_gains.K");
            if (g.contains("D")) cfg.skill_gains.damping = detail::vector_from_json<8>(g.at("D"), "skill_gains.D");
        }
        if (j.contains("home")) cfg.home = detail::vector_from_json<kNumJoints>(j.at("home"), "home");
        cfg.control_rate = j.value("control_rate", cfg.control_rate);
        cfg.record_rate = j.value("record_rate", cfg.record_rate);
        cfg.settle_timeout = j.value("settle_timeout", cfg.settle_timeout);
        cfg.skill_dir = j.value("skill_dir", cfg.skill_dir);
        cfg.static_dir = j.value("static_dir", cfg.static_dir);
        cfg.bind_address = j.value("bind_address", cfg.bind_address);
        cfg.port = j.value("port", cfg.port);
        cfg.state_decimation = j.value("state_decimation", cfg.state_decimation);
        cfg.time_scale = j.value("time_scale", cfg.time_scale);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

}  // namespace teleskill
