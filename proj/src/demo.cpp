#include "teleop/demo.hpp"

#include <cmath>
#include <istream>

#include "teleop/chain_config.hpp"
#include "teleop/errors.hpp"
#include "teleop/json_io.hpp"

namespace teleop {

using json_io::json;

namespace {

json header_to_json(const DemoHeader& h) {
    return {{"header",
             {{"chain", h.chain},
              {"damping", h.damping},
              {"control_rate", h.control_rate},
              {"initial_joints", json_io::to_json(h.initial_joints)},
              {"scene", h.scene ? json(std::string(to_string(*h.scene))) : json(nullptr)}}}};
}

DemoHeader header_from_json(const json& doc) {
    const json& h = json_io::require(doc, "header");
    DemoHeader out;
    out.chain = json_io::require(h, "chain", "header");
    out.damping = json_io::require_number(h, "damping", "header");
    out.control_rate = json_io::require_number(h, "control_rate", "header");
    out.initial_joints = json_io::as_vector(json_io::require(h, "initial_joints", "header"), "header.initial_joints");
    const json& scene = json_io::require(h, "scene", "header");
    if (!scene.is_null()) {
        if (!scene.is_string()) throw FieldError("header.scene", "expected a task id or null");
        out.scene = parse_task_id(scene.get<std::string>());
        if (!out.scene) throw FieldError("header.scene", "unknown task");
    }
    return out;
}

} // namespace

json demo_record_to_json(const DemoRecord& rec) {
    json j = {{"tick", rec.tick},
              {"sim_time", rec.sim_time},
              {"joints", json_io::to_json(rec.joints)},
              {"tool", json_io::to_json(rec.tool)},
              {"twist", {{"linear", json_io::to_json(rec.twist.linear)}, {"angular", json_io::to_json(rec.twist.angular)}}},
              {"engaged", rec.engaged},
              {"gripper", std::string(to_string(rec.gripper))},
              {"speed_mode", std::string(to_string(rec.speed_mode))},
              {"task", rec.task ? json(std::string(to_string(*rec.task))) : json(nullptr)}};
    if (rec.reset_joints) j["reset_joints"] = json_io::to_json(*rec.reset_joints);
    return j;
}

DemoRecord demo_record_from_json(const json& doc) {
    DemoRecord rec;
    const json& tick = json_io::require(doc, "tick");
    if (!tick.is_number_unsigned()) throw FieldError("tick", "expected a non-negative integer");
    rec.tick = tick.get<std::uint64_t>();
    rec.sim_time = json_io::require_number(doc, "sim_time");
    rec.joints = json_io::as_vector(json_io::require(doc, "joints"), "joints");
    if (doc.contains("reset_joints")) rec.reset_joints = json_io::as_vector(doc["reset_joints"], "reset_joints");
    rec.tool = json_io::as_pose(json_io::require(doc, "tool"), "tool");
    const json& twist = json_io::require(doc, "twist");
    rec.twist.linear = json_io::as_vec3(json_io::require(twist, "linear", "twist"), "twist.linear");
    rec.twist.angular = json_io::as_vec3(json_io::require(twist, "angular", "twist"), "twist.angular");
    rec.engaged = json_io::require_bool(doc, "engaged");
    const std::string gripper = json_io::require_string(doc, "gripper");
    if (gripper != "open" && gripper != "closed") throw FieldError("gripper", "expected open or closed");
    rec.gripper = gripper == "open" ? GripperState::Open : GripperState::Closed;
    const std::string mode = json_io::require_string(doc, "speed_mode");
    if (mode != "normal" && mode != "slow") throw FieldError("speed_mode", "expected normal or slow");
    rec.speed_mode = mode == "normal" ? SpeedMode::Normal : SpeedMode::Slow;
    const json& task = json_io::require(doc, "task");
    if (!task.is_null()) {
        if (!task.is_string()) throw FieldError("task", "expected a task id or null");
        rec.task = parse_task_id(task.get<std::string>());
        if (!rec.task) throw FieldError("task", "unknown task");
    }
    return rec;
}

DemoWriter::DemoWriter(const std::filesystem::path& path, const DemoHeader& header) : out_(path) {
    if (!out_) throw InvalidArgument("cannot open demo file " + path.string() + " for writing");
    out_ << header_to_json(header).dump() << '\n';
    out_.flush();
}

void DemoWriter::write(const DemoRecord& rec) {
    out_ << demo_record_to_json(rec).dump() << '\n';
    ++written_;
    if (written_ % 50 == 0) out_.flush();
}

DemoHeader make_demo_header(const Bridge& bridge) {
    DemoHeader h;
    h.chain = chain_to_json(bridge.chain());
    h.damping = bridge.config().damping;
    h.control_rate = bridge.config().control_rate;
    h.initial_joints = bridge.robot().joints.positions;
    if (bridge.scene()) h.scene = bridge.scene()->id;
    return h;
}

Demo read_demo(std::istream& in) {
    Demo demo;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded()) throw ParseError(line_no, "corrupt or truncated record");
        try {
            if (!demo.header) {
                demo.header = header_from_json(doc);
                continue;
            }
            DemoRecord rec = demo_record_from_json(doc);
            if (!demo.records.empty() && rec.tick <= demo.records.back().tick) {
                throw FieldError("tick", "ticks must be strictly increasing");
            }
            demo.records.push_back(std::move(rec));
        } catch (const FieldError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return demo;
}

Demo load_demo(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open demo file " + path.string());
    return read_demo(in);
}

DemoReplay replay_demo(const Demo& demo) {
    DemoReplay out;
    if (!demo.header || demo.records.empty()) return out;
    const DemoHeader& h = *demo.header;
    const KinematicChain chain = chain_from_json(h.chain);
    const double dt = 1.0 / h.control_rate;

    RobotState state = make_initial_state(chain, h.initial_joints);
    for (const DemoRecord& rec : demo.records) {
        if (rec.reset_joints) state = make_initial_state(chain, *rec.reset_joints);
        state = integrate_twist(chain, std::move(state), rec.twist, h.damping, dt);
        const Eigen::VectorXd& q = state.joints.positions;
        if (q.size() != rec.joints.size()) {
            ++out.mismatched_ticks;
            out.max_deviation = std::numeric_limits<double>::infinity();
        } else {
            if ((q.array() != rec.joints.array()).any()) ++out.mismatched_ticks;
            out.max_deviation = std::max(out.max_deviation, (q - rec.joints).cwiseAbs().maxCoeff());
        }
        out.joints.push_back(q);
    }
    return out;
}

} // namespace teleop
