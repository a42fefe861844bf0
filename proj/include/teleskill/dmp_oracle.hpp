#pragma once

// Side-by-side run of the classic DMP and the simplified pipeline on a 1-D
// minimum-jerk recording, used as a cross-check of the simplified method.

#include "teleskill/classic_dmp.hpp"
#include "teleskill/skills.hpp"
#include "teleskill/synthetic.hpp"

#include <vector>

namespace teleskill::classic {

struct OracleSpec {
    double duration = 1.0;      // [s] recording length
    double rate = 1000.0;       // [Hz]
    double amplitude = 1.0;     // recorded displacement, from 0
    double goal_shift = 0.5;    // added to the recorded goal for both rollouts
    int basis_count = 100;
    double alpha = 4.0;
    double stiffness = 0.55;
    double damping = 3.5;
};

struct OracleResult {
    std::vector<double> t;
    std::vector<double> recorded;
    std::vector<double> classic;
    std::vector<double> simplified;
    double endpoint_difference = 0.0;
    double nrmse = 0.0;         // RMS difference over the classic rollout's range
    std::string notice;         // fit regularization notice, if any
};

inline OracleResult run_minimum_jerk_oracle(const OracleSpec& spec) {
    const int steps = static_cast<int>(std::lround(spec.duration * spec.rate));
    if (steps < kMinSkillSamples) {
        throw Error("oracle recording needs at least " + std::to_string(kMinSkillSamples) + " samples");
    }
    const double dt = 1.0 / spec.rate;
    OracleResult r;
    std::vector<double> xd, xdd;
    StateSequence states;
    for (int k = 0; k <= steps; ++k) {
        const double t = k * dt;
        const double u = t / spec.duration;
        r.t.push_back(t);
        r.recorded.push_back(spec.amplitude * synthetic::minimum_jerk(u));
        xd.push_back(spec.amplitude * synthetic::minimum_jerk_velocity(u) / spec.duration);
        xdd.push_back(spec.amplitude * synthetic::minimum_jerk_acceleration(u) / (spec.duration * spec.duration));
        StateVector s = identity_state(0.0);
        s[0] = r.recorded.back();
        states.push_back(s);
    }

    DmpParameters p;
    p.stiffness = spec.stiffness;
    p.damping = spec.damping;
    p.alpha = spec.alpha;
    const ClassicDmp dmp = ClassicDmp::fit(r.recorded, xd, xdd, dt, p, spec.basis_count);
    r.notice = dmp.notice();
    const double goal = spec.amplitude + spec.goal_shift;
    r.classic = dmp.rollout(0.0, goal, p.tau, dt, steps);

    SpringDamper gains;
    gains.stiffness.setConstant(spec.stiffness);
    gains.damping.setConstant(spec.damping);
    const SkillRecording skill = build_skill(states, dt, gains, "oracle");
    StateVector g = skill.local_goal();
    g[0] = goal;
    const StateSequence gen = generate(skill, g, goal / spec.amplitude);
    for (const StateVector& s : gen) {
        r.simplified.push_back(s[0]);
    }

    double se = 0.0;
    double lo = r.classic.front();
    double hi = r.classic.front();
    for (std::size_t k = 0; k < r.classic.size(); ++k) {
        se += (r.classic[k] - r.simplified[k]) * (r.classic[k] - r.simplified[k]);
        lo = std::min(lo, r.classic[k]);
        hi = std::max(hi, r.classic[k]);
    }
    r.endpoint_difference = std::abs(r.classic.back() - r.simplified.back());
    r.nrmse = std::sqrt(se / static_cast<double>(r.classic.size())) / std::max(hi - lo, 1e-12);
    return r;
}

}  // namespace teleskill::classic
