#include "teleop/control.hpp"

#include <algorithm>
#include <cmath>

#include "teleop/errors.hpp"

namespace teleop {

namespace {

Eigen::Vector3d ramped(const Eigen::Vector3d& error, double cap, double ramp) {
    const double magnitude = error.norm();
    if (magnitude == 0.0) return Eigen::Vector3d::Zero();
    const double speed = cap * std::min(1.0, magnitude / ramp);
    return (speed / magnitude) * error;
}

} // namespace

std::string_view to_string(SpeedMode mode) { return mode == SpeedMode::Normal ? "normal" : "slow"; }

std::string_view to_string(GripperState state) { return state == GripperState::Open ? "open" : "closed"; }

void SpeedLimits::validate() const {
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(max_linear)) throw InvalidArgument("max_linear must be positive");
    if (!positive(max_angular)) throw InvalidArgument("max_angular must be positive");
    if (!positive(ramp_radius)) throw InvalidArgument("ramp_radius must be positive");
    if (!positive(ramp_angle)) throw InvalidArgument("ramp_angle must be positive");
    if (!positive(slow_factor) || slow_factor > 1.0) throw InvalidArgument("slow_factor must be in (0, 1]");
}

GripperEvent::GripperEvent(GripperSource source, GripperAction action) : source_(source), action_(action) {
    const bool toggle = action == GripperAction::Toggle;
    if ((source == GripperSource::DoubleTap) != toggle) {
        throw InvalidArgument(source == GripperSource::DoubleTap ? "double-tap events can only toggle"
                                                                 : "voice and button events must be open or close");
    }
}

Twist compute_twist(const Pose& current, const Pose& target, const SpeedLimits& limits, SpeedMode mode) {
    const PoseError err = pose_error(current, target);
    const double s = limits.scale(mode);
    Twist t;
    t.linear = ramped(err.position, s * limits.max_linear, limits.ramp_radius);
    t.angular = ramped(err.rotation, s * limits.max_angular, limits.ramp_angle);
    return t;
}

Twist control_tick(const ControlSession& session, const Pose& robot_pose, const SpeedLimits& limits) {
    if (!session.engaged) return Twist::zero();
    return compute_twist(robot_pose, session.target, limits, session.speed_mode);
}

ControlSession apply_gripper_event(ControlSession session, const GripperEvent& event) {
    switch (event.action()) {
    case GripperAction::Open:
        session.gripper = GripperState::Open;
        break;
    case GripperAction::Close:
        session.gripper = GripperState::Closed;
        break;
    case GripperAction::Toggle:
        session.gripper = session.gripper == GripperState::Open ? GripperState::Closed : GripperState::Open;
        break;
    }
    return session;
}

ControlSession set_speed_mode(ControlSession session, SpeedMode mode) {
    session.speed_mode = mode;
    return session;
}

ControlSession update_target(ControlSession session, const Pose& pose, bool engaged, double timestamp) {
    if (timestamp < session.last_update) {
        ++session.stale_dropped;
        return session;
    }
    session.target = pose;
    session.engaged = engaged;
    session.last_update = timestamp;
    return session;
}

} // namespace teleop
