// teleskill: headless driver for recording, generating and replaying skills.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or parse error.

#include "teleskill/dmp_oracle.hpp"
#include "teleskill/figures.hpp"
#include "teleskill/headless.hpp"
#include "teleskill/protocol.hpp"
#include "teleskill/service.hpp"
#include "teleskill/skill_store.hpp"

#include "CLI11.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <pthread.h>

using namespace teleskill;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct UsageError : Error {
    using Error::Error;
};

SimConfig config_or_default(const std::string& path) { return path.empty() ? SimConfig{} : load_config(path); }

SkillType skill_type_or_throw(const std::string& s) {
    const auto t = parse_skill_type(s);
    if (!t) {
        throw UsageError("unknown skill type '" + s + "' (expected local, global or hybrid)");
    }
    return *t;
}

// --- record ----------------------------------------------------------------

struct RecordArgs {
    std::string script;
    double rate = 100.0;
    double duration = 0.0;
    std::string name;
    std::string out = "skills";
    std::string config;
};

int cmd_record(const RecordArgs& a) {
    if (!std::filesystem::is_regular_file(a.script)) {
        throw UsageError("cannot open twist script " + a.script);
    }
    TwistScript script;
    try {
        script = TwistScript::load(a.script);
    } catch (const ScriptParseError& e) {
        std::cerr << a.script << ": " << e.what() << "\n";
        return kUsageError;
    }
    const SimConfig cfg = config_or_default(a.config);
    SkillRecording skill = record_script(cfg, script, a.rate, a.duration, a.name);
    const StateSequence base = to_base_frame(skill.states, make_state(skill.recorded_start_pose(), 0.0));
    const double length = synthetic::path_length(base);
    const std::size_t n = skill.intervals();
    SkillStore store(a.out);
    const std::string saved = store.save(std::move(skill));
    std::cout << "N = " << n << " intervals (" << n + 1 << " states)\n"
              << "path length = " << std::setprecision(6) << length << " m\n"
              << "saved " << store.path_for(saved).string() << "\n";
    return 0;
}

// --- generate --------------------------------------------------------------

struct GenerateArgs {
    std::string skill;
    std::string type;
    std::vector<double> start;
    double duration = 0.0;
    std::string out;
};

StateVector checked_start(const std::vector<double>& v) {
    if (v.size() != 8) {
        throw UsageError("--start needs 8 values: x y z q_x q_y q_z q_w g");
    }
    StateVector s = Eigen::Map<const StateVector>(v.data());
    if (!s.allFinite()) {
        throw UsageError("--start values must be finite");
    }
    const double n = s.segment<4>(3).norm();
    if (std::abs(n - 1.0) > 1e-3) {
        throw UsageError("--start quaternion norm " + std::to_string(n) + " is not within 1e-3 of 1");
    }
    if (std::abs(n - 1.0) > 1e-12) {
        std::cerr << "warning: normalizing start quaternion (norm " << std::setprecision(10) << n << ")\n";
        s.segment<4>(3) /= n;
    }
    if (s[7] < 0.0 || s[7] > 1.0) {
        throw UsageError("--start gripper value must lie in [0, 1]");
    }
    return s;
}

int cmd_generate(const GenerateArgs& a) {
    const SkillType type = skill_type_or_throw(a.type);
    const StateVector start = checked_start(a.start);
    if (!(a.duration > 0.0)) {
        throw UsageError("--duration must be positive");
    }
    const SkillRecording skill = load_skill(a.skill);
    std::vector<std::string> warnings;
    const GeneratedTrajectory traj = generate_trajectory(skill, type, start, a.duration, &warnings);
    for (const auto& w : warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    save_trajectory_csv(traj, a.out);
    std::cout << "wrote " << traj.states.size() << " rows to " << a.out << "\n";
    return 0;
}

// --- play ------------------------------------------------------------------

struct PlayArgs {
    std::string skill;
    std::string type = "local";
    double duration = 0.0;
    std::string connect = "ws://127.0.0.1:8700";
    double timeout = 30.0;   // [s] wall time without any message
};

int cmd_play(const PlayArgs& a) {
    if (!(a.duration > 0.0)) {
        throw UsageError("--duration must be positive");
    }
    protocol::Play play;
    play.name = a.skill;
    play.type = skill_type_or_throw(a.type);
    play.duration = a.duration;

    WsClient client(a.connect);
    client.send(protocol::encode(play));
    bool started = false;
    for (;;) {
        const std::string text = client.receive(a.timeout);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error&) {
            continue;
        }
        const std::string type = j.value("type", std::string());
        if (type == "state") {
            if (started) {
                std::cout << text << "\n";
            }
            continue;
        }
        if (type != "event") {
            continue;
        }
        const std::string level = j.value("level", std::string());
        const std::string code = j.value("code", std::string());
        const std::string message = j.value("message", std::string());
        if (level == "error") {
            std::cerr << "server: " << message << "\n";
            return kRuntimeFailure;
        }
        if (level == "warning") {
            std::cerr << "server warning: " << message << "\n";
        }
        if (code == "playback_started") {
            started = true;
        } else if (started && code == "playback_complete") {
            std::cerr << message << "\n";
            return 0;
        } else if (started && code == "playback_stopped") {
            std::cerr << "server: " << message << "\n";
            return kRuntimeFailure;
        }
    }
}

// --- figures ---------------------------------------------------------------

int cmd_figures(const std::string& suite_name, const std::string& out) {
    const SkillType type = skill_type_or_throw(suite_name);
    const FigureSuite suite = make_figure_suite(type);
    for (const auto& w : suite.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    const std::filesystem::path dir(out);
    std::filesystem::create_directories(dir);

    GeneratedTrajectory recording;
    recording.states = suite.recording;
    recording.duration = suite.skill.duration();
    save_trajectory_csv(recording, (dir / "recording.csv").string());
    save_skill(suite.skill, (dir / (suite.skill.name + SkillStore::kExtension)).string());

    std::ofstream starts(dir / "starts.csv");
    starts << "index,x,y,z,q_x,q_y,q_z,q_w,g\n" << std::setprecision(17);
    for (std::size_t i = 0; i < suite.paths.size(); ++i) {
        std::ostringstream file;
        file << "path_" << std::setw(2) << std::setfill('0') << i << ".csv";
        save_trajectory_csv(suite.paths[i], (dir / file.str()).string());
        starts << i;
        for (int k = 0; k < 8; ++k) {
            starts << ',' << suite.starts[i][k];
        }
        starts << '\n';
        const StateVector& end = suite.paths[i].states.back();
        std::cout << file.str() << ": end (" << std::setprecision(4) << end[0] << ", " << end[1] << ", " << end[2]
                  << ")\n";
    }
    std::cout << "wrote " << suite.paths.size() << " paths to " << dir.string() << "\n";
    return 0;
}

// --- dmp-oracle ------------------------------------------------------------

int cmd_oracle(const classic::OracleSpec& spec, const std::string& out) {
    const classic::OracleResult r = classic::run_minimum_jerk_oracle(spec);
    if (!r.notice.empty()) {
        std::cerr << "note: " << r.notice << "\n";
    }
    if (!out.empty()) {
        std::ofstream csv(out);
        if (!csv) {
            throw Error("cannot write " + out);
        }
        csv << "t,recorded,classic,simplified\n" << std::setprecision(17);
        for (std::size_t k = 0; k < r.t.size(); ++k) {
            csv << r.t[k] << ',' << r.recorded[k] << ',' << r.classic[k] << ',' << r.simplified[k] << '\n';
        }
    }
    std::cout << std::setprecision(6) << "classic end    = " << r.classic.back() << "\n"
              << "simplified end = " << r.simplified.back() << "\n"
              << "endpoint diff  = " << r.endpoint_difference << "\n"
              << "NRMSE          = " << r.nrmse * 100.0 << " %\n";
    return 0;
}

// --- serve -----------------------------------------------------------------

struct ServeArgs {
    std::string config;
    int port = -1;
    std::string skills;
    std::string static_dir;
    double time_scale = -1.0;
    bool unthrottled = false;
};

int cmd_serve(const ServeArgs& a) {
    SimConfig cfg = config_or_default(a.config);
    if (a.port >= 0) cfg.port = a.port;
    if (!a.skills.empty()) cfg.skill_dir = a.skills;
    if (!a.static_dir.empty()) cfg.static_dir = a.static_dir;
    if (a.time_scale > 0.0) cfg.time_scale = a.time_scale;
    if (a.unthrottled) cfg.time_scale = 0.0;
    cfg.validate();

    // Block the shutdown signals before any thread starts so only sigwait
    // below sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Service service(cfg);
    service.start();
    std::cout << "listening on " << cfg.bind_address << ":" << service.port() << " (skills in " << cfg.skill_dir
              << ")" << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    std::cout << "shutting down" << std::endl;
    service.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"teleskill: record, generate and replay DMP skills on a simulated 6R arm"};
    app.require_subcommand(1);

    RecordArgs rec;
    auto* record = app.add_subcommand("record", "record a skill from a twist script on the headless simulator");
    record->add_option("--script", rec.script, "CSV rows: t,v_x,v_y,v_z,w_x,w_y,w_z,g_rate")->required();
    record->add_option("--rate", rec.rate, "recording rate [Hz]");
    record->add_option("--duration", rec.duration, "recording length [s]")->required();
    record->add_option("--name", rec.name, "skill name")->required();
    record->add_option("--out", rec.out, "skill directory");
    record->add_option("--config", rec.config, "simulator config (JSON)");

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "generate a trajectory CSV from a skill file");
    generate->add_option("--skill", gen.skill, "skill file")->required();
    generate->add_option("--type", gen.type, "local, global or hybrid")->required();
    generate->add_option("--start", gen.start, "start state: x y z q_x q_y q_z q_w g")->required()->expected(8);
    generate->add_option("--duration", gen.duration, "playback duration T [s]")->required();
    generate->add_option("--out", gen.out, "output CSV")->required();

    PlayArgs play;
    auto* playc = app.add_subcommand("play", "play a stored skill on a running service");
    playc->add_option("--skill", play.skill, "skill name in the service's store")->required();
    playc->add_option("--type", play.type, "local, global or hybrid");
    playc->add_option("--duration", play.duration, "playback duration T [s]")->required();
    playc->add_option("--connect", play.connect, "service URL");
    playc->add_option("--timeout", play.timeout, "give up after this many seconds without a message");

    std::string suite;
    std::string fig_out = "figures";
    auto* figures = app.add_subcommand("figures", "emit plot data for a local, hybrid or global path family");
    figures->add_option("--suite", suite, "local, hybrid or global")->required();
    figures->add_option("--out", fig_out, "output directory");

    classic::OracleSpec oracle;
    std::string oracle_out;
    auto* dmp = app.add_subcommand("dmp-oracle", "compare classic DMP and simplified pipeline on a 1-D recording");
    dmp->add_option("--rate", oracle.rate, "recording rate [Hz]");
    dmp->add_option("--duration", oracle.duration, "recording length [s]");
    dmp->add_option("--basis", oracle.basis_count, "number of basis functions");
    dmp->add_option("--alpha", oracle.alpha, "canonical system decay");
    dmp->add_option("--goal-shift", oracle.goal_shift, "goal offset applied to both rollouts");
    dmp->add_option("--out", oracle_out, "optional CSV of both rollouts");

    ServeArgs srv;
    auto* serve = app.add_subcommand("serve", "run the live WebSocket/HTTP service");
    serve->add_option("--config", srv.config, "simulator config (JSON)");
    serve->add_option("--port", srv.port, "override the configured port (0 picks a free one)");
    serve->add_option("--skills", srv.skills, "override the skill directory");
    serve->add_option("--static", srv.static_dir, "override the UI asset directory");
    serve->add_option("--time-scale", srv.time_scale, "simulated seconds per wall second");
    serve->add_flag("--unthrottled", srv.unthrottled, "run the control loop as fast as possible");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    try {
        if (*record) return cmd_record(rec);
        if (*generate) return cmd_generate(gen);
        if (*playc) return cmd_play(play);
        if (*figures) return cmd_figures(suite, fig_out);
        if (*dmp) return cmd_oracle(oracle, oracle_out);
        if (*serve) return cmd_serve(srv);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const TooFewSamplesError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeFailure;
    }
    return kUsageError;
}
