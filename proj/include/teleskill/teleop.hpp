#pragma once

// Joystick-style teleoperation: time-integration of twist and gripper-rate
// commands into a desired end-effector pose and gripper state, plus the CSV
// twist scripts used for headless recording.

#include "teleskill/geometry.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace teleskill {

struct TwistCommand {
    Vector3d linear = Vector3d::Zero();    // [m/s], base frame
    Vector3d angular = Vector3d::Zero();   // [rad/s], base frame
    double gripper_rate = 0.0;             // [1/s]

    bool finite() const { return linear.allFinite() && angular.allFinite() && std::isfinite(gripper_rate); }
};

struct TwistLimits {
    double linear = 0.25;
    double angular = 1.0;
    double gripper = 1.0;
};

/// Scales the linear and angular parts down to their magnitude limits and
/// clamps the gripper rate. Non-finite commands become a zero twist.
inline TwistCommand clamp(const TwistCommand& cmd, const TwistLimits& limits) {
    if (!cmd.finite()) {
        return {};
    }
    TwistCommand out = cmd;
    const double v = out.linear.norm();
    if (v > limits.linear) {
        out.linear *= limits.linear / v;
    }
    const double w = out.angular.norm();
    if (w > limits.angular) {
        out.angular *= limits.angular / w;
    }
    out.gripper_rate = std::clamp(out.gripper_rate, -limits.gripper, limits.gripper);
    return out;
}

struct TeleopState {
    Pose target;            // x^d, q^d in the base frame
    double gripper = 0.0;   // g^d in [0, 1]
};

inline double integrate_gripper(double g, double rate, double dt) {
    return std::clamp(g + rate * dt, 0.0, 1.0);
}

/// x^d += v dt, q^d += 1/2 (0, w) q^d dt, then renormalized. The gripper is
/// left untouched; see advance() for the combined update.
inline TeleopState integrate_twist(const TeleopState& state, const TwistCommand& cmd, double dt) {
    if (!(dt > 0.0)) {
        throw Error("teleop integration step must be positive");
    }
    TeleopState next = state;
    next.target.translation += cmd.linear * dt;
    const Vector4d q = to_xyzw(state.target.rotation) + quaternion_derivative(cmd.angular, state.target.rotation) * dt;
    next.target.rotation = normalize(q);
    return next;
}

inline TeleopState advance(const TeleopState& state, const TwistCommand& cmd, double dt) {
    TeleopState next = integrate_twist(state, cmd, dt);
    next.gripper = integrate_gripper(state.gripper, cmd.gripper_rate, dt);
    return next;
}

class ScriptParseError : public Error {
public:
    ScriptParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Piecewise-constant command stream read from CSV rows
/// `t, v_x, v_y, v_z, w_x, w_y, w_z, g_rate`. Each row's command holds until
/// the next row's timestamp; before the first row the command is zero.
class TwistScript {
public:
    struct Row {
        double t = 0.0;
        TwistCommand command;
    };

    TwistScript() = default;
    explicit TwistScript(std::vector<Row> rows) : rows_(std::move(rows)) {}

    static TwistScript parse(std::istream& in) {
        std::vector<Row> rows;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            const auto first = line.find_first_not_of(" \t");
            if (first == std::string::npos || line[first] == '#') {
                continue;
            }
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                cells.push_back(cell);
            }
            // Header row.
            if (rows.empty() && !cells.empty() && cells[0].find_first_of("tT") != std::string::npos &&
                cells[0].find_first_of("0123456789") == std::string::npos) {
                continue;
            }
            if (cells.size() != 8) {
                throw ScriptParseError(line_no, "expected 8 columns, got " + std::to_string(cells.size()));
            }
            double v[8];
            for (int i = 0; i < 8; ++i) {
                v[i] = parse_number(cells[i], line_no);
            }
            Row r;
            r.t = v[0];
            r.command.linear = Vector3d(v[1], v[2], v[3]);
            r.command.angular = Vector3d(v[4], v[5], v[6]);
            r.command.gripper_rate = v[7];
            if (!rows.empty() && !(r.t > rows.back().t)) {
                throw ScriptParseError(line_no, "timestamps must be strictly increasing");
            }
            if (r.t < 0.0) {
                throw ScriptParseError(line_no, "negative timestamp");
            }
            rows.push_back(r);
        }
        return TwistScript(std::move(rows));
    }

    static TwistScript load(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw Error("cannot open twist script " + path);
        }
        return parse(in);
    }

    TwistCommand command_at(double t) const {
        TwistCommand cmd;
        for (const Row& r : rows_) {
            if (r.t > t) {
                break;
            }
            cmd = r.command;
        }
        return cmd;
    }

    const std::vector<Row>& rows() const { return rows_; }

private:
    static double parse_number(const std::string& cell, int line_no) {
        std::size_t pos = 0;
        double value = 0.0;
        try {
            value = std::stod(cell, &pos);
        } catch (const std::exception&) {
            throw ScriptParseError(line_no, "not a number: '" + cell + "'");
        }
        if (cell.find_first_not_of(" \t", pos) != std::string::npos) {
            throw ScriptParseError(line_no, "trailing characters in '" + cell + "'");
        }
        if (!std::isfinite(value)) {
            throw ScriptParseError(line_no, "non-finite value");
        }
        return value;
    }

    std::vector<Row> rows_;
};

}  // namespace teleskill
