#include "teleop/protocol.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "teleop/errors.hpp"
#include "teleop/json_io.hpp"

namespace teleop {

using json_io::json;

namespace {

constexpr const char* kPayload = "payload";

const json& payload_field(const WireMessage& msg, std::string_view key) {
    return json_io::require(msg.payload, key, kPayload);
}

std::string payload_path(std::string_view key) { return std::string(kPayload) + "." + std::string(key); }

std::string_view source_name(GripperSource s) {
    switch (s) {
    case GripperSource::VoiceToken:
        return "voice";
    case GripperSource::Button:
        return "button";
    case GripperSource::DoubleTap:
        return "double_tap";
    }
    return "button";
}

std::string_view action_name(GripperAction a) {
    switch (a) {
    case GripperAction::Open:
        return "open";
    case GripperAction::Close:
        return "close";
    case GripperAction::Toggle:
        return "toggle";
    }
    return "open";
}

std::string_view command_name(TaskCommand c) {
    switch (c) {
    case TaskCommand::Start:
        return "start";
    case TaskCommand::Reset:
        return "reset";
    case TaskCommand::SecondAttempt:
        return "second_attempt";
    }
    return "start";
}

WireMessage make(MessageType type, std::uint64_t seq, double timestamp, json payload) {
    WireMessage m;
    m.type = type;
    m.seq = seq;
    m.timestamp = timestamp;
    m.payload = std::move(payload);
    return m;
}

} // namespace

std::string_view to_string(MessageType type) {
    switch (type) {
    case MessageType::PoseTarget:
        return "pose_target";
    case MessageType::DeviceTwist:
        return "device_twist";
    case MessageType::Gripper:
        return "gripper";
    case MessageType::SpeedMode:
        return "speed_mode";
    case MessageType::Anchor:
        return "anchor";
    case MessageType::TaskControl:
        return "task_control";
    case MessageType::State:
        return "state";
    case MessageType::Ack:
        return "ack";
    case MessageType::Error:
        return "error";
    }
    return "error";
}

std::optional<MessageType> parse_message_type(std::string_view text) {
    for (MessageType t : {MessageType::PoseTarget, MessageType::DeviceTwist, MessageType::Gripper,
                          MessageType::SpeedMode, MessageType::Anchor, MessageType::TaskControl, MessageType::State,
                          MessageType::Ack, MessageType::Error}) {
        if (to_string(t) == text) return t;
    }
    return std::nullopt;
}

json WireMessage::to_json() const {
    return {{"type", std::string(teleop::to_string(type))}, {"seq", seq}, {"timestamp", timestamp}, {"payload", payload}};
}

WireMessage message_from_json(const json& doc) {
    const std::string type_name = json_io::require_string(doc, "type");
    const auto type = parse_message_type(type_name);
    if (!type) throw FieldError("type", "unknown message type '" + type_name + "'");

    const json& seq = json_io::require(doc, "seq");
    if (!seq.is_number_unsigned() && !(seq.is_number_integer() && seq.get<std::int64_t>() >= 0)) {
        throw FieldError("seq", "expected a non-negative integer");
    }
    WireMessage m;
    m.type = *type;
    m.seq = seq.get<std::uint64_t>();
    m.timestamp = json_io::require_number(doc, "timestamp");
    m.payload = json_io::require(doc, kPayload);
    if (!m.payload.is_object()) throw FieldError(kPayload, "expected an object");
    return m;
}

WireMessage parse_message(std::string_view text) {
    json doc = json::parse(text.begin(), text.end(), nullptr, false);
    if (doc.is_discarded()) throw FieldError("<message>", "not valid JSON");
    return message_from_json(doc);
}

SphereInput decode_pose_target(const WireMessage& msg) {
    SphereInput in;
    in.pose = Pose(json_io::as_vec3(payload_field(msg, "position"), payload_path("position")),
                   json_io::as_quaternion(payload_field(msg, "orientation"), payload_path("orientation")));
    in.engaged = json_io::require_bool(msg.payload, "engaged", kPayload);
    in.timestamp = msg.timestamp;
    return in;
}

DeviceTwist decode_device_twist(const WireMessage& msg) {
    DeviceTwist d;
    d.translation = json_io::as_vec3(payload_field(msg, "translation"), payload_path("translation"));
    d.rotation = json_io::as_vec3(payload_field(msg, "rotation"), payload_path("rotation"));
    d.button = json_io::require_bool(msg.payload, "button", kPayload);
    if ((d.translation.array().abs() > 1.0).any()) throw FieldError(payload_path("translation"), "axes must lie in [-1, 1]");
    if ((d.rotation.array().abs() > 1.0).any()) throw FieldError(payload_path("rotation"), "axes must lie in [-1, 1]");
    return d;
}

GripperEvent decode_gripper(const WireMessage& msg) {
    const std::string action = json_io::require_string(msg.payload, "action", kPayload);
    const std::string source = json_io::require_string(msg.payload, "source", kPayload);
    GripperAction a;
    if (action == "open") a = GripperAction::Open;
    else if (action == "close") a = GripperAction::Close;
    else if (action == "toggle") a = GripperAction::Toggle;
    else throw FieldError(payload_path("action"), "expected open, close or toggle");
    GripperSource s;
    if (source == "voice") s = GripperSource::VoiceToken;
    else if (source == "button") s = GripperSource::Button;
    else if (source == "double_tap") s = GripperSource::DoubleTap;
    else throw FieldError(payload_path("source"), "expected voice, button or double_tap");
    try {
        return GripperEvent(s, a);
    } catch (const InvalidArgument& e) {
        throw FieldError(payload_path("action"), e.what());
    }
}

SpeedMode decode_speed_mode(const WireMessage& msg) {
    const std::string mode = json_io::require_string(msg.payload, "mode", kPayload);
    if (mode == "normal") return SpeedMode::Normal;
    if (mode == "slow") return SpeedMode::Slow;
    throw FieldError(payload_path("mode"), "expected normal or slow");
}

CorrespondenceSet decode_anchor(const WireMessage& msg) {
    const json& pairs = payload_field(msg, "pairs");
    if (!pairs.is_array()) throw FieldError(payload_path("pairs"), "expected an array of [operator, robot] pairs");
    CorrespondenceSet out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::string path = payload_path("pairs") + "[" + std::to_string(i) + "]";
        if (!pairs[i].is_array() || pairs[i].size() != 2) throw FieldError(path, "expected [operator_xyz, robot_xyz]");
        out.push_back({json_io::as_vec3(pairs[i][0], path + "[0]"), json_io::as_vec3(pairs[i][1], path + "[1]")});
    }
    return out;
}

TaskControl decode_task_control(const WireMessage& msg) {
    const std::string task = json_io::require_string(msg.payload, "task", kPayload);
    const auto id = parse_task_id(task);
    if (!id) throw FieldError(payload_path("task"), "unknown task '" + task + "'");
    const std::string command = json_io::require_string(msg.payload, "command", kPayload);
    TaskControl tc;
    tc.task = *id;
    if (command == "start") tc.command = TaskCommand::Start;
    else if (command == "reset") tc.command = TaskCommand::Reset;
    else if (command == "second_attempt") tc.command = TaskCommand::SecondAttempt;
    else throw FieldError(payload_path("command"), "expected start, reset or second_attempt");
    return tc;
}

WireMessage encode_pose_target(std::uint64_t seq, const SphereInput& input) {
    return make(MessageType::PoseTarget, seq, input.timestamp,
                {{"position", json_io::to_json(input.pose.position())},
                 {"orientation", json_io::to_json(input.pose.orientation())},
                 {"engaged", input.engaged}});
}

WireMessage encode_device_twist(std::uint64_t seq, double timestamp, const DeviceTwist& input) {
    return make(MessageType::DeviceTwist, seq, timestamp,
                {{"translation", json_io::to_json(input.translation)},
                 {"rotation", json_io::to_json(input.rotation)},
                 {"button", input.button}});
}

WireMessage encode_gripper(std::uint64_t seq, double timestamp, const GripperEvent& event) {
    return make(MessageType::Gripper, seq, timestamp,
                {{"action", std::string(action_name(event.action()))},
                 {"source", std::string(source_name(event.source()))}});
}

WireMessage encode_speed_mode(std::uint64_t seq, double timestamp, SpeedMode mode) {
    return make(MessageType::SpeedMode, seq, timestamp, {{"mode", std::string(to_string(mode))}});
}

WireMessage encode_anchor(std::uint64_t seq, double timestamp, const CorrespondenceSet& pairs) {
    json arr = json::array();
    for (const Correspondence& c : pairs) {
        arr.push_back(json::array({json_io::to_json(c.operator_point), json_io::to_json(c.robot_point)}));
    }
    return make(MessageType::Anchor, seq, timestamp, {{"pairs", std::move(arr)}});
}

WireMessage encode_task_control(std::uint64_t seq, double timestamp, const TaskControl& control) {
    return make(MessageType::TaskControl, seq, timestamp,
                {{"task", std::string(to_string(control.task))}, {"command", std::string(command_name(control.command))}});
}

WireMessage make_ack(std::uint64_t ref_seq, double timestamp, json detail) {
    json payload = detail.is_object() ? std::move(detail) : json{{"detail", std::move(detail)}};
    payload["ref_seq"] = ref_seq;
    return make(MessageType::Ack, 0, timestamp, std::move(payload));
}

WireMessage make_error(std::optional<std::uint64_t> ref_seq, double timestamp, std::string_view code,
                       std::string_view detail) {
    json payload = {{"code", std::string(code)}, {"detail", std::string(detail)}};
    if (ref_seq) payload["ref_seq"] = *ref_seq;
    return make(MessageType::Error, 0, timestamp, std::move(payload));
}

ScriptedTrajectory read_trajectory(std::istream& in) {
    std::vector<TrajectoryEvent> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const WireMessage msg = parse_message(line);
            TrajectoryEvent ev;
            ev.timestamp = msg.timestamp;
            switch (msg.type) {
            case MessageType::PoseTarget:
                ev.payload = decode_pose_target(msg);
                break;
            case MessageType::DeviceTwist:
                ev.payload = decode_device_twist(msg);
                break;
            case MessageType::Gripper:
                ev.payload = decode_gripper(msg);
                break;
            case MessageType::SpeedMode:
                ev.payload = decode_speed_mode(msg);
                break;
            default:
                throw FieldError("type", "message type '" + std::string(to_string(msg.type)) +
                                             "' cannot appear in a trajectory");
            }
            events.push_back(std::move(ev));
        } catch (const FieldError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return ScriptedTrajectory(std::move(events));
}

ScriptedTrajectory load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open trajectory file " + path.string());
    return read_trajectory(in);
}

void write_trajectory(std::ostream& out, const ScriptedTrajectory& traj) {
    std::uint64_t seq = 1;
    for (const TrajectoryEvent& ev : traj.events()) {
        WireMessage msg = std::visit(
            [&](const auto& p) -> WireMessage {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, SphereInput>) {
                    SphereInput s = p;
                    s.timestamp = ev.timestamp;
                    return encode_pose_target(seq, s);
                } else if constexpr (std::is_same_v<T, DeviceTwist>) {
                    return encode_device_twist(seq, ev.timestamp, p);
                } else if constexpr (std::is_same_v<T, GripperEvent>) {
                    return encode_gripper(seq, ev.timestamp, p);
                } else {
                    return encode_speed_mode(seq, ev.timestamp, p);
                }
            },
            ev.payload);
        out << msg.serialize() << '\n';
        ++seq;
    }
}

} // namespace teleop
