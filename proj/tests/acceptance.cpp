// One PASS/FAIL line per acceptance criterion; exit status is the number of failures.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "oracles.hpp"
#include "teleop/bridge.hpp"
#include "teleop/chain_config.hpp"
#include "teleop/control.hpp"
#include "teleop/demo.hpp"
#include "teleop/input_adapters.hpp"

using namespace teleop;
using Eigen::MatrixXd;
using Eigen::Quaterniond;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

const std::string kData = TELEOP_DATA_DIR;
const std::string kTeleop = TELEOP_CLI;
const char* kScenes[] = {"pour", "peg_in_hole", "ring_on_peg", "bookshelf"};

// Pinned tolerances and budgets.
constexpr double kCapTol = 1e-12;
constexpr double kCapBudget = 5.0;
constexpr double kJacobianTol = 1e-4;
constexpr double kStationarityTol = 1e-8;
constexpr double kKinematicsBudget = 30.0;
constexpr double kRotationTol = 1e-9;
constexpr double kRegistrationTol = 1e-9;
constexpr double kGridTol = 1e-4;
constexpr double kEndToEndBudget = 60.0;
constexpr double kDisplacement = 0.0625;
constexpr double kDisplacementRel = 0.02;

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

KinematicChain gen3() { return load_chain(kData + "/chains/kinova_gen3.json"); }

MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
    return m;
}

Outcome cap_contract() {
    const auto t0 = std::chrono::steady_clock::now();
    const SpeedLimits lim;
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> scale(-4.0, 0.5);
    double worst_cap = 0.0, worst_ratio = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Pose current = oracle::random_pose(rng);
        const Pose target(current.position() + oracle::random_unit(rng) * std::pow(10.0, scale(rng)),
                          oracle::random_quaternion(rng));
        const SpeedMode mode = i % 2 ? SpeedMode::Slow : SpeedMode::Normal;
        const Twist t = compute_twist(current, target, lim, mode);
        const double f = mode == SpeedMode::Slow ? lim.slow_factor : 1.0;
        worst_cap = std::max({worst_cap, t.linear.norm() - f * lim.max_linear, t.angular.norm() - f * lim.max_angular});
        const Twist n = compute_twist(current, target, lim, SpeedMode::Normal);
        const Twist s = compute_twist(current, target, lim, SpeedMode::Slow);
        worst_ratio = std::max(worst_ratio, (s.stacked() - n.stacked() / 3.0).cwiseAbs().maxCoeff());
    }
    const double elapsed = seconds_since(t0);
    return {worst_cap <= kCapTol && worst_ratio <= kCapTol && elapsed < kCapBudget,
            fmt("10000 samples, max cap excess %.2e, max |slow - normal/3| %.2e, %.2f s", worst_cap, worst_ratio,
                elapsed)};
}

Outcome stop_on_release() {
    const KinematicChain chain = gen3();
    LoopConfig cfg;
    cfg.require_anchor = false;
    std::mt19937_64 rng(1002);
    std::bernoulli_distribution engage(0.5), send(0.7);
    std::size_t disengaged_ticks = 0, nonzero = 0, moved = 0;
    for (int run = 0; run < 20; ++run) {
        Bridge bridge(chain, std::nullopt, cfg);
        std::uint64_t seq = 0;
        for (int k = 0; k < 200; ++k) {
            if (send(rng)) {
                const Pose target(bridge.robot().tool_pose.position() + oracle::random_vec(rng, 0.2),
                                  oracle::random_quaternion(rng));
                bridge.handle_message(encode_pose_target(++seq, SphereInput{target, engage(rng), bridge.sim_time()}));
            }
            const bool engaged = bridge.session().engaged;
            const VectorXd before = bridge.robot().joints.positions;
            const Bridge::TickOutput out = bridge.tick();
            if (!engaged) {
                ++disengaged_ticks;
                if (!out.commanded.is_exactly_zero()) ++nonzero;
                if (bridge.robot().joints.positions != before) ++moved;
            }
        }
    }

    Bridge bridge(chain, std::nullopt, cfg);
    const Pose far = Pose::from_translation({0.3, 0.0, 0.0}) * bridge.robot().tool_pose;
    std::uint64_t seq = 0;
    for (int k = 0; k < 50; ++k) {
        bridge.handle_message(encode_pose_target(++seq, SphereInput{far, true, bridge.sim_time()}));
        bridge.tick();
    }
    bridge.handle_message(encode_pose_target(++seq, SphereInput{far, false, bridge.sim_time()}));
    const VectorXd at_release = bridge.robot().joints.positions;
    const bool halted = bridge.tick().commanded.is_exactly_zero() && bridge.robot().joints.positions == at_release;

    return {nonzero == 0 && moved == 0 && halted && disengaged_ticks > 0,
            fmt("%.0f fuzzed disengaged ticks, %.0f non-zero twists, %.0f moved; burst-then-release halted in one tick: ",
                static_cast<double>(disengaged_ticks), static_cast<double>(nonzero), static_cast<double>(moved)) +
                (halted ? "yes" : "no")};
}

Outcome kinematics_oracles() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1003);
    std::uniform_int_distribution<int> dof(1, 9);
    double worst_fd = 0.0;
    for (int i = 0; i < 100; ++i) {
        const KinematicChain chain = oracle::random_chain(rng, dof(rng));
        const VectorXd q = oracle::random_config(rng, chain);
        worst_fd = std::max(worst_fd, (jacobian(chain, q) - oracle::fd_jacobian(chain, q)).cwiseAbs().maxCoeff());
    }
    double worst_stat = 0.0;
    std::size_t beaten = 0;
    std::uniform_real_distribution<double> scale_exp(-4.0, 0.0);
    const KinematicChain arm = gen3();
    for (int i = 0; i < 50; ++i) {
        const MatrixXd j = i % 2 ? random_matrix(rng, 6, 7) : MatrixXd(jacobian(arm, oracle::random_config(rng, arm)));
        const VectorXd v = random_matrix(rng, 6, 1);
        const double lambda = kDefaultDamping * (1 + i % 5);
        Twist tw{v.head<3>(), v.tail<3>()};
        const VectorXd qd = dls_velocity_ik(j, tw, lambda);
        worst_stat = std::max(worst_stat, oracle::dls_stationarity(j, v, lambda, qd).norm());
        const double best = oracle::dls_objective(j, v, lambda, qd);
        for (int k = 0; k < 2000; ++k) {
            const VectorXd delta = random_matrix(rng, 7, 1) * std::pow(10.0, scale_exp(rng));
            if (oracle::dls_objective(j, v, lambda, qd + delta) < best - 1e-12 * (1 + best)) ++beaten;
        }
    }
    const double elapsed = seconds_since(t0);
    return {worst_fd <= kJacobianTol && worst_stat <= kStationarityTol && beaten == 0 && elapsed < kKinematicsBudget,
            fmt("100 chains max |J - J_fd| %.2e; 50 DLS instances max stationarity %.2e, %.0f of 100000 perturbations "
                "better; %.2f s",
                worst_fd, worst_stat, static_cast<double>(beaten), elapsed)};
}

Outcome mixed_frame() {
    const SpeedLimits lim;
    std::mt19937_64 rng(1004);
    std::uniform_real_distribution<double> axis(-1.0, 1.0);
    std::size_t translation_changed = 0;
    double worst_rot = 0.0;
    for (int i = 0; i < 100; ++i) {
        DeviceTwist d;
        d.translation = {axis(rng), axis(rng), axis(rng)};
        d.rotation = {axis(rng), axis(rng), axis(rng)};
        const Quaterniond q = oracle::random_quaternion(rng);
        const Twist ref = spacemouse_to_twist(d, Quaterniond::Identity(), lim, SpeedMode::Normal);
        const Twist got = spacemouse_to_twist(d, q, lim, SpeedMode::Normal);
        if (got.linear != ref.linear) ++translation_changed;
        const Eigen::Matrix3d r = oracle::homogeneous(Vector3d::Zero(), q).topLeftCorner<3, 3>();
        worst_rot = std::max(worst_rot, (got.angular - r * ref.angular).norm());
    }
    return {translation_changed == 0 && worst_rot <= kRotationTol,
            fmt("100 orientations, translation changed in %.0f, max |w - R w_0| %.2e",
                static_cast<double>(translation_changed), worst_rot)};
}

Outcome registration() {
    std::mt19937_64 rng(1005);
    double worst_r = 0.0, worst_t = 0.0;
    for (int i = 0; i < 200; ++i) {
        const Quaterniond r = oracle::random_quaternion(rng);
        const Vector3d t = oracle::random_vec(rng, 2.0);
        CorrespondenceSet pairs;
        for (int k = 0; k < 3 + i % 6; ++k) {
            const Vector3d p = oracle::random_vec(rng, 0.5);
            pairs.push_back({p, r * p + t});
        }
        const AnchorTransform a = register_correspondences(pairs);
        worst_r = std::max(worst_r, oracle::angle_between(a.rotation, r));
        worst_t = std::max(worst_t, (a.translation - t).norm());
    }
    std::uniform_real_distribution<double> angle(-std::numbers::pi + 0.01, std::numbers::pi - 0.01);
    std::normal_distribution<double> noise(0.0, 0.002);
    double worst_grid = 0.0;
    for (int i = 0; i < 30; ++i) {
        const Quaterniond r(Eigen::AngleAxisd(angle(rng), Vector3d::UnitZ()));
        const Vector3d t = oracle::random_vec(rng, 1.0);
        CorrespondenceSet pairs;
        for (int k = 0; k < 6; ++k) {
            Vector3d p = oracle::random_vec(rng, 0.5);
            p.z() = 0.0;
            pairs.push_back({p, r * p + t + Vector3d(noise(rng), noise(rng), 0.0)});
        }
        const Vector3d rv = rotation_log(register_correspondences(pairs).rotation);
        worst_grid = std::max({worst_grid, rv.head<2>().norm(),
                               std::abs(oracle::wrap_angle(rv.z() - oracle::planar_grid_yaw(pairs)))});
    }
    return {worst_r <= kRegistrationTol && worst_t <= kRegistrationTol && worst_grid <= kGridTol,
            fmt("200 known transforms max rotation error %.2e rad, translation %.2e m; 30 planar vs grid %.2e rad",
                worst_r, worst_t, worst_grid)};
}

Outcome end_to_end() {
    const auto t0 = std::chrono::steady_clock::now();
    const KinematicChain chain = gen3();
    bool ok = true;
    std::string detail;
    for (const char* stem : kScenes) {
        const TaskScene scene = load_scene(kData + "/scenes/" + stem + ".json");
        const BenchResult r = run_bench(chain, scene, load_trajectory(kData + "/trajectories/" + stem + ".jsonl"),
                                        LoopConfig{});
        ok = ok && r.best.score == Score::Full && r.best.elapsed < scene.time_limit;
        detail += std::string(to_string(scene.id)) + " " + std::to_string(static_cast<int>(r.best.score)) +
                  fmt(" @ %.2f s; ", r.best.elapsed);
    }

    // Scoring rules: only 100/50/0, the 180 s limit, best of at most two.
    TaskScene probe = load_scene(kData + "/scenes/peg_in_hole.json");
    const std::size_t n = probe.checkpoints.size();
    TaskProgress all{n, std::vector<double>(n, 1.0)};
    TaskProgress some{probe.partial_threshold, std::vector<double>(probe.partial_threshold, 1.0)};
    const bool rules = score_trial(all, 120.0, probe).score == Score::Full &&
                       score_trial(all, 120.0, probe).elapsed == 120.0 &&
                       score_trial(some, 180.0, probe).score == Score::Partial &&
                       score_trial({}, 30.0, probe).score == Score::None &&
                       score_trial({}, 30.0, probe).elapsed == 180.0 && probe.time_limit == 180.0;
    TrialResult a, b;
    a.score = Score::Partial;
    a.elapsed = 90.0;
    b.score = Score::Full;
    b.elapsed = 150.0;
    const TrialResult best = best_trial({a, b});
    const bool best_ok = best.score == Score::Full && best.elapsed == 150.0;

    const double elapsed = seconds_since(t0);
    return {ok && rules && best_ok && elapsed < kEndToEndBudget,
            detail + "scoring rules " + (rules && best_ok ? "ok" : "VIOLATED") + fmt("; %.2f s", elapsed)};
}

int run_cli(const std::string& args) {
    const std::string cmd = "\"" + kTeleop + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome demo_determinism() {
    const KinematicChain chain = gen3();
    const TaskScene scene = load_scene(kData + "/scenes/bookshelf.json");
    LoopConfig cfg;
    cfg.require_anchor = false;
    const auto dir = std::filesystem::temp_directory_path() / ("teleop_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const auto in_process = dir / "in_process.jsonl";
    std::size_t ticks = 0;
    {
        DemoWriter writer(in_process, make_demo_header(Bridge(chain, scene, cfg)));
        run_bench(chain, scene, load_trajectory(kData + "/trajectories/bookshelf.jsonl"), cfg,
                  [&](const DemoRecord& r) { writer.write(r); });
        ticks = writer.written();
    }
    const DemoReplay same = replay_demo(load_demo(in_process));

    // Recording and replay in separate processes.
    const auto recorded = dir / "cli.jsonl";
    const int rec = run_cli("bench --scene RING_ON_PEG --data-dir \"" + kData + "\" --trajectory \"" + kData +
                            "/trajectories/ring_on_peg.jsonl\" --report \"" + (dir / "report.jsonl").string() +
                            "\" --record \"" + recorded.string() + "\"");
    const int rep = rec == 0 ? run_cli("replay --demo \"" + recorded.string() + "\"") : -1;
    const DemoReplay cross = replay_demo(load_demo(recorded));
    std::filesystem::remove_all(dir);

    const bool ok = ticks > 0 && same.bitwise_equal() && same.joints.size() == ticks && rec == 0 && rep == 0 &&
                    cross.bitwise_equal() && !cross.joints.empty();
    return {ok, fmt("in-process %.0f ticks, %.0f mismatched; ", static_cast<double>(ticks),
                    static_cast<double>(same.mismatched_ticks)) +
                    fmt("separate processes %.0f ticks, %.0f mismatched, bench exit %.0f, replay exit %.0f",
                        static_cast<double>(cross.joints.size()), static_cast<double>(cross.mismatched_ticks), rec,
                        rep)};
}

struct Sweep {
    double lo = 1e9, hi = 0.0, min_alignment = 1.0;
};

Sweep displacement_sweep(double damping) {
    const KinematicChain chain = gen3();
    LoopConfig cfg;
    cfg.require_anchor = false;
    cfg.damping = damping;
    std::mt19937_64 rng(1008);
    Sweep s;
    for (int i = 0; i < 100; ++i) {
        Bridge bridge(chain, std::nullopt, cfg);
        const Pose start = bridge.robot().tool_pose;
        const Vector3d dir = oracle::random_unit(rng);
        const Pose target(start.position() + dir, start.orientation());
        std::uint64_t seq = 0;
        for (int k = 0; k < 50; ++k) {
            bridge.handle_message(encode_pose_target(++seq, SphereInput{target, true, bridge.sim_time()}));
            bridge.tick();
        }
        const Vector3d d = bridge.robot().tool_pose.position() - start.position();
        s.lo = std::min(s.lo, d.norm());
        s.hi = std::max(s.hi, d.norm());
        s.min_alignment = std::min(s.min_alignment, d.normalized().dot(dir));
    }
    return s;
}

Outcome displacement() {
    const Sweep s = displacement_sweep(kDefaultDamping);
    const Sweep heavy = displacement_sweep(0.05);
    const bool ok = s.lo >= kDisplacement * (1 - kDisplacementRel) && s.hi <= kDisplacement * (1 + kDisplacementRel);
    return {ok, fmt("100 directions from home, lambda %.3f: %.5f..%.5f m, min cos to error direction %.5f", kDefaultDamping,
                    s.lo, s.hi, s.min_alignment) +
                    fmt(" (lambda 0.05 for reference: %.5f..%.5f m)", heavy.lo, heavy.hi)};
}

} // namespace

int main() {
    report("cap contract", cap_contract);
    report("stop-on-release", stop_on_release);
    report("kinematics oracle suite", kinematics_oracles);
    report("mixed-frame oracle", mixed_frame);
    report("registration", registration);
    report("end-to-end scripted tasks", end_to_end);
    report("demo determinism", demo_determinism);
    report("displacement check", displacement);
    return failures;
}
