#include "teleskill/sim_robot.hpp"
#include "teleskill/synthetic.hpp"

#include <gtest/gtest.h>

using namespace teleskill;

namespace {

bool has_event(const std::vector<RobotEvent>& events, const std::string& code) {
    return std::any_of(events.begin(), events.end(), [&](const RobotEvent& e) { return e.code == code; });
}

// Drives a smooth 5 s demonstration: translation, a turn about z and a gripper close.
SkillRecording record_demo(SimRobot& robot, int steps = 500) {
    robot.start_recording();
    for (int k = 0; k < steps; ++k) {
        const double u = static_cast<double>(k) / steps;
        TwistCommand c;
        c.linear = Vector3d(0.04, 0.02 * std::cos(2.0 * kPi * u), 0.01);
        c.angular = Vector3d(0, 0, 0.1);
        robot.command_twist(c);
        robot.command_gripper(u < 0.5 ? 0.3 : 0.0);
        robot.step();
    }
    return robot.stop_recording("demo");
}

// Runs playback until it finishes; returns the events seen.
std::vector<RobotEvent> run_playback(SimRobot& robot, int max_steps = 5000) {
    std::vector<RobotEvent> all;
    for (int k = 0; k < max_steps && robot.mode() == Mode::Playback; ++k) {
        robot.step();
        for (auto& e : robot.take_events()) all.push_back(e);
    }
    return all;
}

}  // namespace

TEST(SimRobot, StartsIdleAtHome) {
    SimRobot robot{SimConfig{}};
    EXPECT_EQ(robot.mode(), Mode::Idle);
    EXPECT_EQ(robot.joints().position, SimConfig{}.home);
    EXPECT_EQ(robot.step_size(), 0.01);
}

TEST(SimRobot, IdleStepOnlyAdvancesTime) {
    SimRobot robot{SimConfig{}};
    const Snapshot a = robot.snapshot();
    const Snapshot b = robot.step();
    EXPECT_DOUBLE_EQ(b.t, a.t + 0.01);
    EXPECT_EQ(b.joints, a.joints);
    EXPECT_EQ(b.gripper, a.gripper);
    EXPECT_EQ(b.mode, Mode::Idle);
}

TEST(SimRobot, ConstantTwistDisplacesEndEffector) {
    SimRobot robot{SimConfig{}};
    const Vector3d start = robot.end_effector().translation;
    TwistCommand c;
    c.linear = Vector3d(0.1, 0, 0);
    robot.command_twist(c);
    EXPECT_EQ(robot.mode(), Mode::Teleop);
    for (int k = 0; k < 100; ++k) robot.step();
    const Vector3d d = robot.end_effector().translation - start;
    EXPECT_NEAR(d.x(), 0.1, 0.05 * 0.1);
    EXPECT_LT(d.tail<2>().norm(), 0.05 * 0.1);
}

TEST(SimRobot, TwistIsClampedToLimits) {
    SimRobot robot{SimConfig{}};
    const Vector3d start = robot.end_effector().translation;
    TwistCommand c;
    c.linear = Vector3d(0, 10.0, 0);
    robot.command_twist(c);
    for (int k = 0; k < 50; ++k) robot.step();
    const double moved = (robot.end_effector().translation - start).norm();
    EXPECT_LE(moved, SimConfig{}.twist_limits.linear * 0.5 + 1e-9);
}

TEST(SimRobot, GripperFollowsRateAndSaturates) {
    SimRobot robot{SimConfig{}};
    robot.command_gripper(0.5);
    for (int k = 0; k < 100; ++k) robot.step();
    EXPECT_NEAR(robot.gripper(), 0.5, 1e-9);
    for (int k = 0; k < 200; ++k) robot.step();
    EXPECT_EQ(robot.gripper(), 1.0);
}

TEST(SimRobot, TenSecondRecordingHas1001States) {
    SimRobot robot{SimConfig{}};
    const SkillRecording skill = record_demo(robot, 1000);
    EXPECT_EQ(skill.states.size(), 1001u);
    EXPECT_EQ(skill.name, "demo");
    EXPECT_DOUBLE_EQ(skill.dt_rec, 0.01);
    EXPECT_EQ(robot.mode(), Mode::Teleop);
}

TEST(SimRobot, RecordingEndpointsMatchRobot) {
    SimRobot robot{SimConfig{}};
    const StateVector before = robot.current_state();
    const SkillRecording skill = record_demo(robot);
    const Pose start = skill.recorded_start_pose();
    EXPECT_LT((start.translation - before.head<3>()).norm(), 1e-12);
    EXPECT_LT((skill.final_base_state - robot.current_state()).norm(), 1e-12);
}

TEST(SimRobot, StationaryRecordingHasZeroForcing) {
    SimRobot robot{SimConfig{}};
    robot.command_twist(TwistCommand{});
    robot.start_recording();
    for (int k = 0; k < 100; ++k) robot.step();
    const SkillRecording skill = robot.stop_recording("still");
    for (const StateVector& f : skill.forcing) EXPECT_LT(f.norm(), 1e-9);
}

TEST(SimRobot, ShortRecordingRejectedAndDiscarded) {
    SimRobot robot{SimConfig{}};
    robot.start_recording();
    for (int k = 0; k < 5; ++k) robot.step();   // 6 samples
    EXPECT_THROW(robot.stop_recording("short"), TooFewSamplesError);
    EXPECT_EQ(robot.recorded_samples(), 0u);
    EXPECT_EQ(robot.mode(), Mode::Teleop);
}

TEST(SimRobot, LocalReplayReachesRecordedEnd) {
    SimRobot robot{SimConfig{}};
    const Pose start = robot.end_effector();
    const SkillRecording skill = record_demo(robot);
    // drive back to the recording start before replaying
    robot.stop();
    SimRobot fresh{SimConfig{}};
    ASSERT_LT((fresh.end_effector().translation - start.translation).norm(), 1e-12);
    fresh.play(skill, SkillType::Local, 5.0);
    EXPECT_EQ(fresh.mode(), Mode::Playback);
    const std::vector<RobotEvent> events = run_playback(fresh);
    EXPECT_TRUE(has_event(events, "playback_complete"));
    EXPECT_EQ(fresh.mode(), Mode::Idle);
    const Pose end = state_pose(skill.final_base_state);
    EXPECT_LT((fresh.end_effector().translation - end.translation).norm(), 0.01);
    EXPECT_LT(angular_distance(fresh.end_effector().rotation, end.rotation), deg2rad(2.0));
    EXPECT_NEAR(fresh.gripper(), skill.final_base_state[7], 0.02);
}

TEST(SimRobot, GlobalReplayFromOtherStart) {
    SimRobot recorder{SimConfig{}};
    const SkillRecording skill = record_demo(recorder);
    SimConfig cfg;
    cfg.home[0] += 0.2;
    cfg.home[2] -= 0.1;
    SimRobot robot{cfg};
    robot.play(skill, SkillType::Global, 10.0);
    run_playback(robot);
    const Pose end = state_pose(skill.final_base_state);
    const double disp = (end.translation - forward_kinematics(cfg.chain, cfg.home).translation).norm();
    // 5 s recording: residual factor exp(-0.683 * 5) of the start offset plus tracking
    EXPECT_LT((robot.end_effector().translation - end.translation).norm(), 0.05 * disp + 1e-3);
}

TEST(SimRobot, PlaybackStartsAtCurrentPose) {
    SimRobot recorder{SimConfig{}};
    const SkillRecording skill = record_demo(recorder);
    SimRobot robot{SimConfig{}};
    const StateVector here = robot.current_state();
    robot.play(skill, SkillType::Hybrid, 5.0);
    ASSERT_TRUE(robot.trajectory().has_value());
    EXPECT_LT((robot.trajectory()->states.front().head<3>() - here.head<3>()).norm(), 1e-12);
}

TEST(SimRobot, NonPositiveDurationRejected) {
    SimRobot recorder{SimConfig{}};
    const SkillRecording skill = record_demo(recorder);
    SimRobot robot{SimConfig{}};
    EXPECT_THROW(robot.play(skill, SkillType::Local, 0.0), SkillError);
    EXPECT_THROW(robot.play(skill, SkillType::Local, -2.0), SkillError);
    EXPECT_EQ(robot.mode(), Mode::Idle);
}

TEST(SimRobot, ModeTransitions) {
    SimRobot recorder{SimConfig{}};
    const SkillRecording skill = record_demo(recorder);

    SimRobot robot{SimConfig{}};
    EXPECT_THROW(robot.stop_recording("x"), ModeError);
    robot.start_recording();
    EXPECT_EQ(robot.mode(), Mode::Recording);
    EXPECT_THROW(robot.start_recording(), ModeError);
    EXPECT_THROW(robot.play(skill, SkillType::Local, 1.0), ModeError);
    robot.stop();
    EXPECT_EQ(robot.mode(), Mode::Idle);
    EXPECT_TRUE(has_event(robot.take_events(), "recording_discarded"));

    robot.command_twist(TwistCommand{});
    EXPECT_EQ(robot.mode(), Mode::Teleop);
    robot.play(skill, SkillType::Local, 1.0);   // teleop -> idle -> playback
    EXPECT_EQ(robot.mode(), Mode::Playback);
    EXPECT_TRUE(has_event(robot.take_events(), "playback_started"));
    EXPECT_THROW(robot.command_twist(TwistCommand{}), ModeError);
    EXPECT_THROW(robot.command_gripper(0.1), ModeError);
    EXPECT_THROW(robot.start_recording(), ModeError);
    EXPECT_THROW(robot.play(skill, SkillType::Local, 1.0), ModeError);
    robot.step();
    robot.stop();
    EXPECT_EQ(robot.mode(), Mode::Idle);
    EXPECT_TRUE(has_event(robot.take_events(), "playback_stopped"));
    EXPECT_FALSE(robot.trajectory().has_value());
}

TEST(SimRobot, DeterministicRuns) {
    auto run = [] {
        SimRobot robot{SimConfig{}};
        const SkillRecording skill = record_demo(robot);
        robot.stop();
        robot.play(skill, SkillType::Global, 3.0);
        run_playback(robot);
        return std::make_pair(skill.states, robot.joints().position);
    };
    const auto a = run();
    const auto b = run();
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
}

TEST(SimRobot, IkDivergenceFallsBackToIdle) {
    SimConfig cfg;
    cfg.ik.gains.setConstant(1e308);
    SimRobot robot{cfg};
    TwistCommand c;
    c.linear = Vector3d(0.1, 0, 0);
    robot.command_twist(c);
    for (int k = 0; k < 10 && robot.mode() != Mode::Idle; ++k) robot.step();
    EXPECT_EQ(robot.mode(), Mode::Idle);
    EXPECT_TRUE(has_event(robot.take_events(), "ik_divergence"));
    EXPECT_TRUE(robot.joints().position.allFinite());
}

TEST(SimConfig, DefaultsValidate) { EXPECT_NO_THROW(SimConfig{}.validate()); }

TEST(SimConfig, JsonOverrides) {
    const nlohmann::json j = {{"control_rate", 200.0},
                              {"record_rate", 50.0},
                              {"port", 9000},
                              {"ik", {{"iterations_per_cycle", 10}, {"gains", 5.0}}},
                              {"teleop", {{"max_linear", 0.1}}},
                              {"skill_gains", {{"K", 0.8}}},
                              {"home", {0, 0, 0, 0, 0, 0}}};
    const SimConfig cfg = config_from_json(j);
    EXPECT_EQ(cfg.control_rate, 200.0);
    EXPECT_EQ(cfg.record_rate, 50.0);
    EXPECT_EQ(cfg.port, 9000);
    EXPECT_EQ(cfg.ik_iterations_per_cycle, 10);
    EXPECT_EQ(cfg.ik.gains, Vector6d::Constant(5.0));
    EXPECT_EQ(cfg.twist_limits.linear, 0.1);
    EXPECT_EQ(cfg.skill_gains.stiffness, StateVector::Constant(0.8));
    EXPECT_EQ(cfg.skill_gains.damping, StateVector::Constant(3.5));
    EXPECT_EQ(cfg.home, JointVector::Zero());
}

TEST(SimConfig, ChainRoundTrip) {
    const ChainModel c = ChainModel::default_arm();
    const ChainModel back = chain_from_json(chain_to_json(c));
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int i = 0; i < 10; ++i) {
        JointVector q;
        for (int k = 0; k < kNumJoints; ++k) q[k] = u(rng);
        EXPECT_LT((forward_kinematics(back, q).matrix() - forward_kinematics(c, q).matrix()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(SimConfig, Errors) {
    EXPECT_THROW(config_from_json({{"control_rate", -1.0}}), ConfigError);
    EXPECT_THROW(config_from_json({{"port", 70000}}), ConfigError);
    EXPECT_THROW(config_from_json({{"home", {1, 2}}}), ConfigError);
    EXPECT_THROW(config_from_json({{"control_rate", "fast"}}), ConfigError);
    EXPECT_THROW(config_from_json({{"ik", {{"damping", 1.5}}}}), Error);
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(SimRobot, DegenerateHybridLeavesRobotUntouched) {
    SimRobot robot{SimConfig{}};
    const SkillRecording skill = record_demo(robot);
    robot.stop();
    // at the recording end the global goal has no translation
    EXPECT_THROW(robot.play(skill, SkillType::Hybrid, 3.0), DegenerateSkillError);
    EXPECT_EQ(robot.mode(), Mode::Idle);
}
