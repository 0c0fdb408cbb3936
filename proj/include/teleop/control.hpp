#pragma once

#include <cstdint>
#include <string_view>

#include "teleop/kinematics.hpp"

namespace teleop {

enum class SpeedMode { Normal, Slow };
enum class GripperState { Open, Closed };

std::string_view to_string(SpeedMode mode);
std::string_view to_string(GripperState state);

struct SpeedLimits {
    double max_linear = 0.0625;     // m/s
    double max_angular = 0.25;      // rad/s
    double slow_factor = 1.0 / 3.0;
    double ramp_radius = 0.05;      // m, linear speed ramps to zero inside this distance
    double ramp_angle = 0.2;        // rad, angular counterpart of ramp_radius

    // Throws InvalidArgument unless every field is positive and slow_factor <= 1.
    void validate() const;
    double scale(SpeedMode mode) const { return mode == SpeedMode::Normal ? 1.0 : slow_factor; }
};

enum class GripperSource { VoiceToken, Button, DoubleTap };
enum class GripperAction { Open, Close, Toggle };

// Voice and button events carry Open/Close, the double-tap gesture carries Toggle.
class GripperEvent {
  public:
    // Throws InvalidArgument on a source/action pairing outside that rule.
    GripperEvent(GripperSource source, GripperAction action);

    static GripperEvent voice(GripperAction a) { return {GripperSource::VoiceToken, a}; }
    static GripperEvent button(GripperAction a) { return {GripperSource::Button, a}; }
    static GripperEvent double_tap() { return {GripperSource::DoubleTap, GripperAction::Toggle}; }

    GripperSource source() const noexcept { return source_; }
    GripperAction action() const noexcept { return action_; }

  private:
    GripperSource source_;
    GripperAction action_;
};

// The operator's live intent as seen by the control loop.
struct ControlSession {
    bool engaged = false;
    Pose target;
    SpeedMode speed_mode = SpeedMode::Normal;
    GripperState gripper = GripperState::Open;
    double last_update = -1.0;   // sender timestamp of the newest accepted target, seconds
    std::uint64_t stale_dropped = 0;
};

// Capped twist toward `target`. Translation and rotation are saturated
// independently: full speed outside the ramp radius/angle, linear falloff inside.
Twist compute_twist(const Pose& current, const Pose& target, const SpeedLimits& limits, SpeedMode mode);

// Exactly zero when disengaged.
Twist control_tick(const ControlSession& session, const Pose& robot_pose, const SpeedLimits& limits);

ControlSession apply_gripper_event(ControlSession session, const GripperEvent& event);
ControlSession set_speed_mode(ControlSession session, SpeedMode mode);

// Latest-wins by sender timestamp. An update older than the last accepted one
// leaves the session untouched apart from bumping `stale_dropped`.
ControlSession update_target(ControlSession session, const Pose& pose, bool engaged, double timestamp);

} // namespace teleop
