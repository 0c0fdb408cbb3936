#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "teleop/alignment.hpp"
#include "teleop/control.hpp"
#include "teleop/input_adapters.hpp"
#include "teleop/kinematics.hpp"
#include "teleop/protocol.hpp"
#include "teleop/sim_world.hpp"

namespace teleop {

struct LoopConfig {
    double control_rate = 50.0;    // Hz
    double broadcast_rate = 20.0;  // Hz, <= control_rate
    SpeedLimits limits;
    double damping = kDefaultDamping;
    double watchdog = 0.5;         // s without input while engaged before disengaging
    double deadband = kDefaultDeadband;
    double max_residual = kDefaultMaxResidual;
    // Headless runs drive the arm without an anchor message; the operator
    // frame is then the robot base frame.
    bool require_anchor = true;

    void validate() const;
    double period() const { return 1.0 / control_rate; }
};

// One control tick as written to a demonstration log.
struct DemoRecord {
    std::uint64_t tick = 0;
    double sim_time = 0.0;
    Eigen::VectorXd joints;                      // after the step
    std::optional<Eigen::VectorXd> reset_joints; // set when the arm was teleported before stepping
    Pose tool;
    Twist twist;                                 // commanded, fed to IK
    bool engaged = false;
    GripperState gripper = GripperState::Open;
    SpeedMode speed_mode = SpeedMode::Normal;
    std::optional<TaskId> task;
};

// Shared by the control loop and demo replay so both take bit-identical paths:
// IK on the current Jacobian, then an Euler step.
RobotState integrate_twist(const KinematicChain& chain, RobotState state, const Twist& twist, double damping,
                           double dt);

using ConnectionId = std::uint64_t;

// The control-loop side of the server. Not thread-safe: one driver context
// calls handle_message() and tick(); the network side goes through Mailbox.
class Bridge {
  public:
    Bridge(KinematicChain chain, std::optional<TaskScene> scene, LoopConfig config);

    // Applies one message and returns the replies for its sender (ack or error).
    std::vector<WireMessage> handle_message(const WireMessage& msg, ConnectionId conn = 0);
    // Replies for a frame that failed envelope parsing.
    WireMessage reject_frame(const std::string& field, const std::string& detail) const;

    struct TickOutput {
        Twist commanded;
        std::optional<WireMessage> state;   // present on broadcast ticks
        std::vector<WireMessage> events;    // errors raised by the loop itself (watchdog, IK)
        std::optional<TrialResult> finished_trial;
    };
    TickOutput tick();

    WireMessage state_message() const;

    const KinematicChain& chain() const noexcept { return chain_; }
    const LoopConfig& config() const noexcept { return config_; }
    const std::optional<TaskScene>& scene() const noexcept { return scene_; }
    const RobotState& robot() const noexcept { return robot_; }
    const ControlSession& session() const noexcept { return session_; }
    const AnchorTransform& anchor() const noexcept { return anchor_; }
    const TaskProgress& progress() const noexcept { return progress_; }
    const std::vector<TrialResult>& trials() const noexcept { return trials_; }
    bool trial_active() const noexcept { return trial_active_; }
    std::uint64_t ticks() const noexcept { return ticks_; }
    double sim_time() const noexcept { return static_cast<double>(ticks_) / config_.control_rate; }
    std::uint64_t watchdog_trips() const noexcept { return watchdog_trips_; }

    // Starts attempt 1 of the configured scene (same as a task_control start).
    void start_trial();
    // Scores the running attempt at the current time, if any.
    std::optional<TrialResult> finish_trial();

    void set_recorder(std::function<void(const DemoRecord&)> recorder) { recorder_ = std::move(recorder); }

  private:
    std::vector<WireMessage> handle_task_control(const WireMessage& msg);
    void reset_world();
    void begin_attempt(std::size_t attempt);

    KinematicChain chain_;
    std::optional<TaskScene> scene_;
    LoopConfig config_;

    RobotState robot_;
    ControlSession session_;
    AnchorTransform anchor_;
    std::map<ConnectionId, std::uint64_t> last_seq_;

    std::optional<DeviceTwist> device_;
    bool device_button_ = false;
    double last_pose_input_ = 0.0;
    double last_device_input_ = 0.0;
    std::uint64_t watchdog_trips_ = 0;

    TaskProgress progress_;
    bool trial_active_ = false;
    double trial_start_ = 0.0;
    std::size_t attempt_ = 0;
    std::vector<TrialResult> trials_;

    std::uint64_t ticks_ = 0;
    std::optional<Eigen::VectorXd> pending_reset_;
    std::function<void(const DemoRecord&)> recorder_;
};

// Network contexts deposit parsed messages here; the control loop drains once
// per tick. Continuous streams (pose_target, device_twist) are latest-wins per
// connection; discrete commands queue in arrival order.
class Mailbox {
  public:
    struct Entry {
        ConnectionId conn = 0;
        WireMessage msg;
    };
    struct Drained {
        std::vector<Entry> deliver;     // in arrival order
        std::vector<Entry> superseded;  // stream messages overwritten before the tick
    };

    void push(ConnectionId conn, WireMessage msg);
    Drained drain();

  private:
    std::mutex mutex_;
    std::vector<Entry> queue_;
    std::vector<Entry> superseded_;
};

// Adapts a Bridge to replay(): trajectory events become wire messages.
class BridgeSink : public CommandSink {
  public:
    explicit BridgeSink(Bridge& bridge) : bridge_(bridge) {}
    void deliver(const TrajectoryEvent& event) override;
    bool tick(double sim_time) override;

    std::size_t rejected() const noexcept { return rejected_; }

  private:
    Bridge& bridge_;
    std::uint64_t seq_ = 0;
    std::size_t rejected_ = 0;
};

struct BenchResult {
    TrialResult best;
    std::vector<TrialResult> trials;
    ReplayReport replay;
    std::uint64_t clamp_events = 0;
};

// Headless run of one scene: anchor-free, trial started at t = 0, replay until
// the task completes or its time limit expires.
BenchResult run_bench(const KinematicChain& chain, const TaskScene& scene, const ScriptedTrajectory& traj,
                      LoopConfig config, std::function<void(const DemoRecord&)> recorder = {});

} // namespace teleop
