#include "teleop/input_adapters.hpp"

#include <cmath>

#include "teleop/errors.hpp"

namespace teleop {

namespace {

Eigen::Vector3d apply_deadband(const Eigen::Vector3d& v, double deadband) {
    Eigen::Vector3d out = v;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(out[i]) < deadband) out[i] = 0.0;
    }
    return out;
}

} // namespace

void DeviceTwist::validate() const {
    const auto in_range = [](const Eigen::Vector3d& v) {
        return v.allFinite() && (v.array().abs() <= 1.0).all();
    };
    if (!in_range(translation)) throw InvalidArgument("device translation axes must lie in [-1, 1]");
    if (!in_range(rotation)) throw InvalidArgument("device rotation axes must lie in [-1, 1]");
}

TargetCommand sphere_to_target(const SphereInput& input, const Pose& anchor) {
    return {anchor * input.pose, input.engaged};
}

Twist spacemouse_to_twist(const DeviceTwist& input, const Eigen::Quaterniond& ee_orientation,
                          const SpeedLimits& limits, SpeedMode mode, double deadband) {
    input.validate();
    const double s = limits.scale(mode);
    Twist t;
    t.linear = (s * limits.max_linear) * apply_deadband(input.translation, deadband);
    t.angular = ee_orientation.normalized() * ((s * limits.max_angular) * apply_deadband(input.rotation, deadband));
    return t;
}

ScriptedTrajectory::ScriptedTrajectory(std::vector<TrajectoryEvent> events) : events_(std::move(events)) {
    for (std::size_t i = 0; i < events_.size(); ++i) {
        if (!std::isfinite(events_[i].timestamp)) {
            throw ValidationError("event " + std::to_string(i) + " has a non-finite timestamp");
        }
        if (i > 0 && !(events_[i].timestamp > events_[i - 1].timestamp)) {
            throw ValidationError("event " + std::to_string(i) + " timestamp " +
                                  std::to_string(events_[i].timestamp) + " does not increase on " +
                                  std::to_string(events_[i - 1].timestamp));
        }
    }
}

std::size_t tick_count(double seconds, double rate) {
    if (!(rate > 0.0)) throw InvalidArgument("tick rate must be positive");
    if (!(seconds > 0.0)) return 0;
    return static_cast<std::size_t>(std::floor(seconds * rate + 1e-9));
}

ReplayReport replay(const ScriptedTrajectory& traj, CommandSink& sink, double rate, double run_for) {
    if (!(rate > 0.0)) throw InvalidArgument("tick rate must be positive");
    const auto& events = traj.events();
    const double horizon = run_for < 0.0 ? traj.end_time() : run_for;
    const std::size_t ticks = tick_count(horizon, rate);

    ReplayReport report;
    std::size_t next = 0;
    for (std::size_t k = 0; k < ticks; ++k) {
        const double t = static_cast<double>(k) / rate;
        while (next < events.size() && events[next].timestamp <= t) {
            sink.deliver(events[next++]);
            ++report.events_delivered;
        }
        ++report.ticks;
        if (!sink.tick(t)) break;
    }
    if (report.ticks == ticks) {
        while (next < events.size() && events[next].timestamp <= horizon) {
            sink.deliver(events[next++]);
            ++report.events_delivered;
        }
    }
    report.duration = static_cast<double>(report.ticks) / rate;
    return report;
}

} // namespace teleop
