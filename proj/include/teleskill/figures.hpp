#pragma once

// Plot-data suites: one synthetic recording replayed from several start
// poses as a local, global or hybrid skill.

#include "teleskill/skills.hpp"
#include "teleskill/synthetic.hpp"

#include <vector>

namespace teleskill {

struct FigureSuite {
    SkillType type = SkillType::Local;
    StateSequence recording;                 // base frame, sampled at skill.dt_rec
    SkillRecording skill;
    StateSequence starts;
    std::vector<GeneratedTrajectory> paths;  // one per start
    std::vector<std::string> warnings;
};

inline constexpr unsigned kFigureSeed = 20240917u;
inline constexpr int kFigureStarts = 6;

inline FigureSuite make_figure_suite(SkillType type, unsigned seed = kFigureSeed) {
    FigureSuite suite;
    suite.type = type;
    synthetic::ArcSpec spec;
    suite.recording = synthetic::arc(spec);
    suite.skill = build_skill(suite.recording, 1.0 / spec.rate, SpringDamper{}, "figure_" + to_string(type));

    const StateVector& origin = suite.recording.front();
    double duration = suite.skill.duration();
    switch (type) {
        case SkillType::Local:
            suite.starts = synthetic::seeded_starts(origin, kFigureStarts, 0.05, 0.3, deg2rad(60.0), seed);
            break;
        case SkillType::Global:
            suite.starts = synthetic::seeded_starts(origin, kFigureStarts, 0.1, 0.5, deg2rad(45.0), seed);
            duration *= 2.0;
            break;
        case SkillType::Hybrid:
            suite.starts = synthetic::seeded_starts(origin, kFigureStarts, 0.05, 0.2, deg2rad(30.0), seed);
            break;
    }
    for (const StateVector& start : suite.starts) {
        suite.paths.push_back(generate_trajectory(suite.skill, type, start, duration, &suite.warnings));
    }
    return suite;
}

}  // namespace teleskill
