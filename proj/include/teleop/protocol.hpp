#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "teleop/alignment.hpp"
#include "teleop/control.hpp"
#include "teleop/input_adapters.hpp"
#include "teleop/sim_world.hpp"

namespace teleop {

// One JSON object per frame:
//   {"type": "...", "seq": n, "timestamp": seconds, "payload": {...}}
enum class MessageType { PoseTarget, DeviceTwist, Gripper, SpeedMode, Anchor, TaskControl, State, Ack, Error };

std::string_view to_string(MessageType type);
std::optional<MessageType> parse_message_type(std::string_view text);

struct WireMessage {
    MessageType type = MessageType::Ack;
    std::uint64_t seq = 0;
    double timestamp = 0.0;
    nlohmann::json payload = nlohmann::json::object();

    nlohmann::json to_json() const;
    std::string serialize() const { return to_json().dump(); }
};

// Throws FieldError naming the offending envelope field. An unrecognized
// "type" is reported with field "type".
WireMessage message_from_json(const nlohmann::json& doc);
WireMessage parse_message(std::string_view text);

enum class TaskCommand { Start, Reset, SecondAttempt };

struct TaskControl {
    TaskId task = TaskId::Pour;
    TaskCommand command = TaskCommand::Start;
};

// Payload decoders; each throws FieldError("payload.<field>", ...) on bad input.
SphereInput decode_pose_target(const WireMessage& msg);
DeviceTwist decode_device_twist(const WireMessage& msg);
GripperEvent decode_gripper(const WireMessage& msg);
SpeedMode decode_speed_mode(const WireMessage& msg);
CorrespondenceSet decode_anchor(const WireMessage& msg);
TaskControl decode_task_control(const WireMessage& msg);

WireMessage encode_pose_target(std::uint64_t seq, const SphereInput& input);
WireMessage encode_device_twist(std::uint64_t seq, double timestamp, const DeviceTwist& input);
WireMessage encode_gripper(std::uint64_t seq, double timestamp, const GripperEvent& event);
WireMessage encode_speed_mode(std::uint64_t seq, double timestamp, SpeedMode mode);
WireMessage encode_anchor(std::uint64_t seq, double timestamp, const CorrespondenceSet& pairs);
WireMessage encode_task_control(std::uint64_t seq, double timestamp, const TaskControl& control);

// Replies echo the request seq in "ref_seq".
WireMessage make_ack(std::uint64_t ref_seq, double timestamp, nlohmann::json detail = nlohmann::json::object());
WireMessage make_error(std::optional<std::uint64_t> ref_seq, double timestamp, std::string_view code,
                       std::string_view detail);

// Trajectory files hold one wire message per line (pose_target, device_twist,
// gripper, speed_mode). Blank lines are skipped. Throws ParseError with the
// 1-based line number, or ValidationError on non-increasing timestamps.
ScriptedTrajectory read_trajectory(std::istream& in);
ScriptedTrajectory load_trajectory(const std::filesystem::path& path);
void write_trajectory(std::ostream& out, const ScriptedTrajectory& traj);

} // namespace teleop
