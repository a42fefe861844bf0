#include "teleskill/control_loop.hpp"
#include "teleskill/protocol.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace teleskill;
using namespace teleskill::protocol;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("teleskill_proto_" + std::to_string(rd()));
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::vector<json> parsed(const std::vector<Outbound>& out) {
    std::vector<json> j;
    for (const auto& o : out) j.push_back(json::parse(o.text));
    return j;
}

const Outbound* find_event(const std::vector<Outbound>& out, const std::string& code) {
    for (const auto& o : out) {
        const json j = json::parse(o.text);
        if (j["type"] == "event" && j.value("code", "") == code) return &o;
    }
    return nullptr;
}

std::vector<Outbound> run_ticks(ControlLoop& loop, int n) {
    std::vector<Outbound> all;
    for (int i = 0; i < n; ++i) {
        for (auto& o : loop.tick()) all.push_back(std::move(o));
    }
    return all;
}

SimConfig config_in(const fs::path& dir) {
    SimConfig cfg;
    cfg.skill_dir = dir.string();
    return cfg;
}

}  // namespace

TEST(Protocol, ParseTwist) {
    const Command c = parse_command(R"({"type":"twist","v":[0.1,0,0],"w":[0,0,0.5]})");
    const auto& t = std::get<Twist>(c);
    EXPECT_EQ(t.v, Vector3d(0.1, 0, 0));
    EXPECT_EQ(t.w, Vector3d(0, 0, 0.5));
    // missing vectors default to zero
    EXPECT_EQ(std::get<Twist>(parse_command(R"({"type":"twist"})")).v, Vector3d::Zero());
}

TEST(Protocol, ParsePlay) {
    const auto p = std::get<Play>(parse_command(R"({"type":"play","name":"a","skill_type":"hybrid","duration":4})"));
    EXPECT_EQ(p.name, "a");
    EXPECT_EQ(p.type, SkillType::Hybrid);
    EXPECT_EQ(p.duration, 4.0);
    EXPECT_EQ(std::get<Play>(parse_command(R"({"type":"play","name":"a","duration":1})")).type, SkillType::Local);
}

TEST(Protocol, EncodeParseRoundTrip) {
    const std::vector<Command> cmds = {Twist{Vector3d(1, 2, 3), Vector3d(-1, 0, 0.5)},
                                       Gripper{-0.25},
                                       RecordStart{},
                                       RecordStop{"brush"},
                                       Play{"basket", SkillType::Global, 12.5},
                                       Stop{},
                                       ListSkills{}};
    for (const Command& c : cmds) {
        const Command back = parse_command(encode(c));
        EXPECT_EQ(back.index(), c.index());
        EXPECT_EQ(encode(back), encode(c));
    }
}

TEST(Protocol, Errors) {
    EXPECT_THROW(parse_command("nope"), ProtocolError);
    EXPECT_THROW(parse_command("[1,2]"), ProtocolError);
    EXPECT_THROW(parse_command(R"({"type":3})"), ProtocolError);
    EXPECT_THROW(parse_command(R"({"type":"fly"})"), ProtocolError);
    EXPECT_THROW(parse_command(R"({"type":"twist","v":[1,2]})"), ProtocolError);
    EXPECT_THROW(parse_command(R"({"type":"twist","v":[1,"a",2]})"), ProtocolError);
    EXPECT_THROW(parse_command(R"({"type":"play","name":"a"})"), ProtocolError);
    EXPECT_THROW(parse_command(R"({"type":"play","name":"a","duration":1,"skill_type":"bogus"})"), ProtocolError);
    EXPECT_THROW(parse_command(R"({"type":"gripper","rate":"x"})"), ProtocolError);
}

TEST(Protocol, EncodeState) {
    Snapshot s;
    s.t = 1.5;
    s.joints << 1, 2, 3, 4, 5, 6;
    s.ee = Pose(Vector3d(0.1, 0.2, 0.3), Quaterniond::Identity());
    s.gripper = 0.4;
    s.mode = Mode::Playback;
    const json j = json::parse(encode_state(s));
    EXPECT_EQ(j["type"], "state");
    EXPECT_EQ(j["t"], 1.5);
    EXPECT_EQ(j["joints"].size(), 6u);
    EXPECT_EQ(j["joints"][5], 6.0);
    EXPECT_EQ(j["ee"]["pos"][2], 0.3);
    EXPECT_EQ(j["ee"]["quat"], json({0.0, 0.0, 0.0, 1.0}));
    EXPECT_EQ(j["gripper"], 0.4);
    EXPECT_EQ(j["mode"], "playback");
}

TEST(Protocol, EncodeEventsAndSkills) {
    const json e = json::parse(encode_event({RobotEvent::Level::Warning, "careful", "c1"}));
    EXPECT_EQ(e["type"], "event");
    EXPECT_EQ(e["level"], "warning");
    EXPECT_EQ(e["code"], "c1");
    EXPECT_FALSE(json::parse(encode_event({RobotEvent::Level::Info, "x", ""})).contains("code"));
    EXPECT_EQ(json::parse(encode_error("bad"))["level"], "error");
    const json s = json::parse(encode_skills({"a", "b"}));
    EXPECT_EQ(s["names"], json({"a", "b"}));
}

TEST(ControlLoop, TickBroadcastsState) {
    TempDir dir;
    ControlLoop loop(config_in(dir.path()));
    const auto out = loop.tick();
    ASSERT_EQ(out.size(), 1u);
    EXPECT_FALSE(out[0].recipient.has_value());
    EXPECT_EQ(json::parse(out[0].text)["mode"], "idle");
}

TEST(ControlLoop, StateDecimation) {
    TempDir dir;
    SimConfig cfg = config_in(dir.path());
    cfg.state_decimation = 5;
    ControlLoop loop(cfg);
    EXPECT_EQ(run_ticks(loop, 20).size(), 4u);
}

TEST(ControlLoop, ErrorsGoOnlyToSender) {
    TempDir dir;
    ControlLoop loop(config_in(dir.path()));
    for (const char* bad : {"garbage", R"({"type":"record_stop"})",
                            R"({"type":"play","name":"missing","duration":2})",
                            R"({"type":"play","name":"x","duration":0})"}) {
        const auto out = loop.handle(7, bad);
        ASSERT_EQ(out.size(), 1u) << bad;
        EXPECT_EQ(out[0].recipient, std::optional<std::uint64_t>(7));
        EXPECT_EQ(json::parse(out[0].text)["level"], "error") << bad;
    }
    EXPECT_NE(json::parse(loop.handle(7, R"({"type":"play","name":"missing","duration":2})")[0].text)["message"]
                  .get<std::string>()
                  .find("missing"),
              std::string::npos);
}

TEST(ControlLoop, RecordSaveListAndPlay) {
    TempDir dir;
    ControlLoop loop(config_in(dir.path()));
    auto out = loop.handle(1, R"({"type":"record_start"})");
    ASSERT_NE(find_event(out, "recording_started"), nullptr);
    EXPECT_EQ(loop.robot().mode(), Mode::Recording);

    loop.handle(1, R"({"type":"twist","v":[0.05,0,0.02],"w":[0,0,0.1]})");
    loop.handle(1, R"({"type":"gripper","rate":0.2})");
    run_ticks(loop, 200);
    EXPECT_NEAR(loop.robot().gripper(), 0.4, 1e-9);

    out = loop.handle(1, R"({"type":"record_stop","name":"wipe"})");
    ASSERT_NE(find_event(out, "skill_recorded"), nullptr);
    EXPECT_TRUE(fs::is_regular_file(dir.path() / "wipe.skill.json"));
    const auto msgs = parsed(out);
    const auto skills = std::find_if(msgs.begin(), msgs.end(), [](const json& j) { return j["type"] == "skills"; });
    ASSERT_NE(skills, msgs.end());
    EXPECT_EQ((*skills)["names"], json({"wipe"}));
    EXPECT_EQ(loop.store().load("wipe").states.size(), 201u);

    out = loop.handle(2, R"({"type":"list_skills"})");
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].recipient, std::optional<std::uint64_t>(2));

    out = loop.handle(2, R"({"type":"play","name":"wipe","skill_type":"local","duration":1})");
    ASSERT_NE(find_event(out, "playback_started"), nullptr);
    EXPECT_FALSE(find_event(out, "playback_started")->recipient.has_value());
    EXPECT_EQ(loop.robot().mode(), Mode::Playback);
    // twists are refused while playing
    out = loop.handle(1, R"({"type":"twist","v":[0.1,0,0]})");
    EXPECT_EQ(json::parse(out[0].text)["level"], "error");

    const auto ticks = run_ticks(loop, 1000);
    ASSERT_NE(find_event(ticks, "playback_complete"), nullptr);
    EXPECT_EQ(loop.robot().mode(), Mode::Idle);
    EXPECT_EQ(json::parse(ticks.back().text)["mode"], "idle");
}

TEST(ControlLoop, DefaultNameAndDuplicates) {
    TempDir dir;
    ControlLoop loop(config_in(dir.path()));
    for (int i = 0; i < 2; ++i) {
        loop.handle(1, R"({"type":"record_start"})");
        run_ticks(loop, 10);
        loop.handle(1, R"({"type":"record_stop"})");
    }
    EXPECT_EQ(loop.store().list(), (std::vector<std::string>{"skill", "skill_2"}));
}

TEST(ControlLoop, InvalidNameKeepsRecording) {
    TempDir dir;
    ControlLoop loop(config_in(dir.path()));
    loop.handle(1, R"({"type":"record_start"})");
    run_ticks(loop, 10);
    const auto out = loop.handle(1, R"({"type":"record_stop","name":"../evil"})");
    EXPECT_EQ(json::parse(out[0].text)["level"], "error");
    EXPECT_EQ(loop.robot().mode(), Mode::Recording);
    EXPECT_TRUE(loop.store().list().empty());
}

TEST(ControlLoop, StopDuringPlayback) {
    TempDir dir;
    ControlLoop loop(config_in(dir.path()));
    loop.handle(1, R"({"type":"record_start"})");
    loop.handle(1, R"({"type":"twist","v":[0.05,0,0]})");
    run_ticks(loop, 100);
    loop.handle(1, R"({"type":"record_stop","name":"a"})");
    loop.handle(1, R"({"type":"stop"})");
    loop.handle(1, R"({"type":"play","name":"a","duration":5})");
    run_ticks(loop, 10);
    const auto out = loop.handle(3, R"({"type":"stop"})");
    ASSERT_NE(find_event(out, "playback_stopped"), nullptr);
    EXPECT_EQ(loop.robot().mode(), Mode::Idle);
}
