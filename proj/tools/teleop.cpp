// Command-line entry point: serve, bench, replay.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "teleop/bridge.hpp"
#include "teleop/chain_config.hpp"
#include "teleop/demo.hpp"
#include "teleop/errors.hpp"
#include "teleop/protocol.hpp"
#include "teleop/server.hpp"
#include "teleop/sim_world.hpp"

namespace fs = std::filesystem;
using namespace teleop;

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

struct Common {
    std::string data_dir = TELEOP_DATA_DIR;
    std::string chain;
    double control_rate = 50.0;
    double broadcast_rate = 20.0;
    double damping = kDefaultDamping;
    double watchdog = 0.5;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--data-dir", c.data_dir, "Directory holding chains/ and scenes/")->capture_default_str();
    cmd->add_option("--chain", c.chain, "Chain config file (default: <data-dir>/chains/kinova_gen3.json)");
    cmd->add_option("--rate", c.control_rate, "Control rate in Hz")->capture_default_str();
    cmd->add_option("--broadcast-rate", c.broadcast_rate, "State broadcast rate in Hz")->capture_default_str();
    cmd->add_option("--damping", c.damping, "DLS damping")->capture_default_str();
    cmd->add_option("--watchdog", c.watchdog, "Seconds without input before disengaging")->capture_default_str();
}

LoopConfig loop_config(const Common& c) {
    LoopConfig cfg;
    cfg.control_rate = c.control_rate;
    cfg.broadcast_rate = c.broadcast_rate;
    cfg.damping = c.damping;
    cfg.watchdog = c.watchdog;
    cfg.validate();
    return cfg;
}

KinematicChain resolve_chain(const Common& c) {
    const fs::path path = c.chain.empty() ? fs::path(c.data_dir) / "chains" / "kinova_gen3.json" : fs::path(c.chain);
    return load_chain(path);
}

// A scene argument is either a file or a task id resolved under <data-dir>/scenes.
TaskScene resolve_scene(const Common& c, const std::string& arg) {
    if (fs::is_regular_file(arg)) return load_scene(arg);
    const auto id = parse_task_id(arg);
    if (!id) throw InvalidArgument("'" + arg + "' is neither a scene file nor a task id");
    std::string stem(to_string(*id));
    std::transform(stem.begin(), stem.end(), stem.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return load_scene(fs::path(c.data_dir) / "scenes" / (stem + ".json"));
}

int run_serve(const Common& c, const std::optional<std::string>& scene_arg, unsigned short port, bool realtime,
              bool no_anchor, const std::string& record, const std::string& address) {
    KinematicChain chain = resolve_chain(c);
    std::optional<TaskScene> scene;
    if (scene_arg) scene = resolve_scene(c, *scene_arg);
    LoopConfig cfg = loop_config(c);
    cfg.require_anchor = !no_anchor;

    Bridge bridge(std::move(chain), std::move(scene), cfg);
    std::optional<DemoWriter> writer;
    if (!record.empty()) {
        writer.emplace(record, make_demo_header(bridge));
        bridge.set_recorder([&writer](const DemoRecord& r) { writer->write(r); });
    }

    ServerOptions opts;
    opts.address = address;
    opts.port = port;
    opts.realtime = realtime;
    Server server(bridge, opts);
    server.start();
    std::cerr << "listening on " << address << ":" << server.port() << (realtime ? " (realtime)" : " (simulated time)")
              << "\n";

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
    server.wait();
    std::cerr << "stopped after " << bridge.ticks() << " ticks\n";
    return 0;
}

int run_bench_cmd(const Common& c, const std::string& scene_arg, const std::string& traj_path,
                  const std::string& report_path, const std::string& record) {
    const KinematicChain chain = resolve_chain(c);
    const TaskScene scene = resolve_scene(c, scene_arg);
    const ScriptedTrajectory traj = load_trajectory(traj_path);
    LoopConfig cfg = loop_config(c);
    cfg.require_anchor = false;

    std::optional<DemoWriter> writer;
    std::function<void(const DemoRecord&)> recorder;
    if (!record.empty()) {
        const Bridge probe(chain, scene, cfg);
        writer.emplace(record, make_demo_header(probe));
        recorder = [&writer](const DemoRecord& r) { writer->write(r); };
    }

    BenchResult result = run_bench(chain, scene, traj, cfg, recorder);
    if (writer) {
        for (TrialResult& t : result.trials) t.log = record;
        result.best.log = record;
    }

    std::ofstream report(report_path);
    if (!report) throw InvalidArgument("cannot write report " + report_path);
    for (const TrialResult& t : result.trials) report << t.to_json().dump() << '\n';
    nlohmann::json best = result.best.to_json();
    best["best"] = true;
    best["ticks"] = result.replay.ticks;
    best["events_delivered"] = result.replay.events_delivered;
    best["clamp_events"] = result.clamp_events;
    report << best.dump() << '\n';

    std::cout << to_string(scene.id) << ": score " << static_cast<int>(result.best.score) << " in "
              << result.best.elapsed << " s (" << result.replay.ticks << " ticks, " << result.replay.events_delivered
              << " events)\n";
    return 0;
}

int run_replay(const std::string& demo_path) {
    const Demo demo = load_demo(demo_path);
    const DemoReplay r = replay_demo(demo);
    std::cout << r.joints.size() << " ticks replayed, " << r.mismatched_ticks << " mismatched, max deviation "
              << r.max_deviation << "\n";
    if (!r.bitwise_equal()) {
        std::cerr << "error: replay diverged from the recorded joint log\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Teleoperation bridge for a simulated 7-DOF arm"};
    app.require_subcommand(1);

    Common serve_common;
    auto* serve = app.add_subcommand("serve", "Run the WebSocket bridge and control loop");
    add_common(serve, serve_common);
    std::optional<std::string> serve_scene;
    unsigned short port = 8765;
    bool realtime = false;
    bool no_anchor = false;
    std::string serve_record;
    std::string address = "0.0.0.0";
    serve->add_option("--scene", serve_scene, "Task id or scene file");
    serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
    serve->add_option("--address", address, "Bind address")->capture_default_str();
    serve->add_flag("--realtime", realtime, "Pace ticks by the wall clock");
    serve->add_flag("--no-anchor", no_anchor, "Accept engagement without an anchor message");
    serve->add_option("--record,--out", serve_record, "Write a demonstration log");

    Common bench_common;
    auto* bench = app.add_subcommand("bench", "Replay a scripted trajectory against a scene headlessly");
    add_common(bench, bench_common);
    std::string bench_scene, trajectory, report, bench_record;
    bench->add_option("--scene", bench_scene, "Task id or scene file")->required();
    bench->add_option("--trajectory", trajectory, "Trajectory file (JSON lines)")->required();
    bench->add_option("--report", report, "Trial report output (JSON lines)")->required();
    bench->add_option("--record,--out", bench_record, "Write a demonstration log");

    auto* replay_cmd = app.add_subcommand("replay", "Re-run a demonstration log and check it reproduces");
    std::string demo_path;
    replay_cmd->add_option("--demo", demo_path, "Demonstration log")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) {
            return run_serve(serve_common, serve_scene, port, realtime, no_anchor, serve_record, address);
        }
        if (*bench) return run_bench_cmd(bench_common, bench_scene, trajectory, report, bench_record);
        if (*replay_cmd) return run_replay(demo_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
