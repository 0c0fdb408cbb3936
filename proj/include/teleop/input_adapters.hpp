#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "teleop/control.hpp"
#include "teleop/kinematics.hpp"

namespace teleop {

// Control-sphere pose in the operator frame, as streamed by the AR client.
struct SphereInput {
    Pose pose;
    bool engaged = false;
    double timestamp = 0.0;
};

// Pre-normalized 6-axis device reading; every axis in [-1, 1].
struct DeviceTwist {
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    Eigen::Vector3d rotation = Eigen::Vector3d::Zero();
    bool button = false;

    // Throws InvalidArgument when an axis is non-finite or outside [-1, 1].
    void validate() const;
};

inline constexpr double kDefaultDeadband = 0.02;

struct TargetCommand {
    Pose target;  // robot base frame
    bool engaged = false;
};

// target = anchor ∘ input.pose
TargetCommand sphere_to_target(const SphereInput& input, const Pose& anchor);

// Mixed-frame mapping: translation axes are base-frame, rotation axes are
// end-effector-frame and get re-expressed in the base frame. Shares the cap and
// slow-mode scale with compute_twist. Axes with |value| < deadband are zeroed.
Twist spacemouse_to_twist(const DeviceTwist& input, const Eigen::Quaterniond& ee_orientation,
                          const SpeedLimits& limits, SpeedMode mode, double deadband = kDefaultDeadband);

using TrajectoryPayload = std::variant<SphereInput, DeviceTwist, GripperEvent, SpeedMode>;

struct TrajectoryEvent {
    double timestamp = 0.0;
    TrajectoryPayload payload;
};

// Timestamps strictly increasing; enforced on construction.
class ScriptedTrajectory {
  public:
    ScriptedTrajectory() = default;
    // Throws ValidationError on non-monotone or non-finite timestamps.
    explicit ScriptedTrajectory(std::vector<TrajectoryEvent> events);

    const std::vector<TrajectoryEvent>& events() const noexcept { return events_; }
    bool empty() const noexcept { return events_.empty(); }
    double end_time() const noexcept { return events_.empty() ? 0.0 : events_.back().timestamp; }

  private:
    std::vector<TrajectoryEvent> events_;
};

// Consumer driven by replay(): events first, then one tick per control period.
class CommandSink {
  public:
    virtual ~CommandSink() = default;
    virtual void deliver(const TrajectoryEvent& event) = 0;
    // Returns false to stop the replay early (e.g. the task finished).
    virtual bool tick(double sim_time) = 0;
};

struct ReplayReport {
    std::size_t events_delivered = 0;
    std::size_t ticks = 0;
    double duration = 0.0;  // simulated seconds
};

// Number of ticks in `seconds` at `rate` Hz: floor(seconds * rate), with a small
// tolerance so products like 0.29 * 100 are not rounded down by representation error.
std::size_t tick_count(double seconds, double rate);

// Runs floor(run_for * rate) ticks at t_k = k / rate. Events with timestamp <= t_k
// are delivered before tick k. run_for < 0 means "until the last event".
ReplayReport replay(const ScriptedTrajectory& traj, CommandSink& sink, double rate, double run_for = -1.0);

} // namespace teleop
