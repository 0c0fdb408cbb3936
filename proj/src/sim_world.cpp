#include "teleop/sim_world.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include "teleop/errors.hpp"
#include "teleop/json_io.hpp"

namespace teleop {

using json_io::json;

namespace {

constexpr const char* kNoObject = "none";

Region region_from_json(const json& doc, const std::string& path) {
    Region r;
    r.center = json_io::as_pose(json_io::require(doc, "center", path), path + ".center");
    r.position_tolerance = json_io::require_number(doc, "position_tolerance", path);
    r.orientation_tolerance = json_io::require_number(doc, "orientation_tolerance", path);
    return r;
}

json region_to_json(const Region& r) {
    return {{"center", json_io::to_json(r.center)},
            {"position_tolerance", r.position_tolerance},
            {"orientation_tolerance", r.orientation_tolerance}};
}

GripperState gripper_from_string(const std::string& s, const std::string& path) {
    if (s == "open") return GripperState::Open;
    if (s == "closed") return GripperState::Closed;
    throw FieldError(path, "expected \"open\" or \"closed\"");
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace

std::string_view to_string(TaskId id) {
    switch (id) {
    case TaskId::Pour:
        return "POUR";
    case TaskId::PegInHole:
        return "PEG_IN_HOLE";
    case TaskId::RingOnPeg:
        return "RING_ON_PEG";
    case TaskId::Bookshelf:
        return "BOOKSHELF";
    }
    return "UNKNOWN";
}

std::optional<TaskId> parse_task_id(std::string_view text) {
    std::string norm(text);
    for (char& c : norm) {
        c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    for (TaskId id : {TaskId::Pour, TaskId::PegInHole, TaskId::RingOnPeg, TaskId::Bookshelf}) {
        if (norm == to_string(id)) return id;
    }
    return std::nullopt;
}

bool Region::contains(const Pose& pose) const {
    const PoseError e = pose_error(center, pose);
    return e.position.norm() <= position_tolerance && e.rotation.norm() <= orientation_tolerance;
}

bool HeldRequirement::satisfied_by(const std::optional<std::string>& held) const {
    switch (kind) {
    case Kind::Any:
        return true;
    case Kind::Nothing:
        return !held.has_value();
    case Kind::Object:
        return held.has_value() && *held == object;
    }
    return false;
}

Region GraspZone::region_for(const Pose& object_pose) const {
    return {object_pose * offset, position_tolerance, orientation_tolerance};
}

void TaskScene::validate() const {
    if (checkpoints.empty()) throw InvalidArgument("scene has no checkpoints");
    if (!positive(time_limit)) throw InvalidArgument("time_limit must be positive");
    if (partial_threshold > checkpoints.size()) {
        throw InvalidArgument("partial_threshold exceeds the number of checkpoints");
    }
    std::set<std::string> ids;
    for (const SceneObject& o : objects) {
        if (o.id.empty() || o.id == kNoObject) throw InvalidArgument("invalid object id '" + o.id + "'");
        if (!ids.insert(o.id).second) throw InvalidArgument("duplicate object id '" + o.id + "'");
    }
    const auto known = [&](const std::string& id) {
        if (!ids.contains(id)) throw InvalidArgument("unknown object '" + id + "'");
    };
    const auto check_region = [](const Region& r, const std::string& what) {
        if (!positive(r.position_tolerance) || !positive(r.orientation_tolerance)) {
            throw InvalidArgument(what + " tolerances must be strictly positive");
        }
    };
    for (const GraspZone& z : grasp_zones) {
        known(z.object);
        if (!positive(z.position_tolerance) || !positive(z.orientation_tolerance)) {
            throw InvalidArgument("grasp zone '" + z.name + "' tolerances must be strictly positive");
        }
    }
    for (const Checkpoint& cp : checkpoints) {
        check_region(cp.tool, "checkpoint '" + cp.name + "'");
        if (cp.held.kind == HeldRequirement::Kind::Object) known(cp.held.object);
        if (cp.object) {
            known(cp.object->object);
            check_region(cp.object->region, "checkpoint '" + cp.name + "' object");
        }
        if (cp.max_angular_speed && !positive(*cp.max_angular_speed)) {
            throw InvalidArgument("checkpoint '" + cp.name + "' max_angular_speed must be positive");
        }
    }
}

TaskScene scene_from_json(const json& doc) {
    TaskScene scene;
    const std::string id = json_io::require_string(doc, "id");
    const auto task = parse_task_id(id);
    if (!task) throw FieldError("id", "unknown task '" + id + "'");
    scene.id = *task;
    if (auto it = doc.find("time_limit"); it != doc.end()) scene.time_limit = json_io::as_number(*it, "time_limit");
    const double threshold = json_io::require_number(doc, "partial_threshold");
    if (threshold < 0 || threshold != std::floor(threshold)) {
        throw FieldError("partial_threshold", "expected a non-negative integer");
    }
    scene.partial_threshold = static_cast<std::size_t>(threshold);

    const json& objects = json_io::require(doc, "objects");
    if (!objects.is_array()) throw FieldError("objects", "expected an array");
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const std::string path = "objects[" + std::to_string(i) + "]";
        scene.objects.push_back({json_io::require_string(objects[i], "id", path),
                                 json_io::as_pose(json_io::require(objects[i], "pose", path), path + ".pose")});
    }

    const json& zones = json_io::require(doc, "grasp_zones");
    if (!zones.is_array()) throw FieldError("grasp_zones", "expected an array");
    for (std::size_t i = 0; i < zones.size(); ++i) {
        const std::string path = "grasp_zones[" + std::to_string(i) + "]";
        GraspZone z;
        z.object = json_io::require_string(zones[i], "object", path);
        z.name = json_io::require_string(zones[i], "name", path);
        z.offset = json_io::as_pose(json_io::require(zones[i], "offset", path), path + ".offset");
        z.position_tolerance = json_io::require_number(zones[i], "position_tolerance", path);
        z.orientation_tolerance = json_io::require_number(zones[i], "orientation_tolerance", path);
        scene.grasp_zones.push_back(std::move(z));
    }

    const json& cps = json_io::require(doc, "checkpoints");
    if (!cps.is_array()) throw FieldError("checkpoints", "expected an array");
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const std::string path = "checkpoints[" + std::to_string(i) + "]";
        const json& c = cps[i];
        Checkpoint cp;
        cp.name = json_io::require_string(c, "name", path);
        cp.tool = region_from_json(json_io::require(c, "tool", path), path + ".tool");
        if (c.contains("gripper")) cp.gripper = gripper_from_string(json_io::require_string(c, "gripper", path), path + ".gripper");
        if (c.contains("held")) {
            const std::string held = json_io::require_string(c, "held", path);
            cp.held = held == kNoObject ? HeldRequirement{HeldRequirement::Kind::Nothing, {}}
                                        : HeldRequirement{HeldRequirement::Kind::Object, held};
        }
        if (c.contains("object")) {
            const json& o = c["object"];
            cp.object = ObjectRequirement{json_io::require_string(o, "id", path + ".object"),
                                          region_from_json(json_io::require(o, "region", path + ".object"),
                                                           path + ".object.region")};
        }
        if (c.contains("max_angular_speed")) cp.max_angular_speed = json_io::require_number(c, "max_angular_speed", path);
        scene.checkpoints.push_back(std::move(cp));
    }
    scene.validate();
    return scene;
}

json scene_to_json(const TaskScene& scene) {
    json objects = json::array();
    for (const SceneObject& o : scene.objects) objects.push_back({{"id", o.id}, {"pose", json_io::to_json(o.pose)}});
    json zones = json::array();
    for (const GraspZone& z : scene.grasp_zones) {
        zones.push_back({{"object", z.object},
                         {"name", z.name},
                         {"offset", json_io::to_json(z.offset)},
                         {"position_tolerance", z.position_tolerance},
                         {"orientation_tolerance", z.orientation_tolerance}});
    }
    json cps = json::array();
    for (const Checkpoint& cp : scene.checkpoints) {
        json c = {{"name", cp.name}, {"tool", region_to_json(cp.tool)}};
        if (cp.gripper) c["gripper"] = std::string(to_string(*cp.gripper));
        if (cp.held.kind == HeldRequirement::Kind::Nothing) c["held"] = kNoObject;
        if (cp.held.kind == HeldRequirement::Kind::Object) c["held"] = cp.held.object;
        if (cp.object) c["object"] = {{"id", cp.object->object}, {"region", region_to_json(cp.object->region)}};
        if (cp.max_angular_speed) c["max_angular_speed"] = *cp.max_angular_speed;
        cps.push_back(std::move(c));
    }
    return {{"id", std::string(to_string(scene.id))},
            {"time_limit", scene.time_limit},
            {"partial_threshold", scene.partial_threshold},
            {"objects", std::move(objects)},
            {"grasp_zones", std::move(zones)},
            {"checkpoints", std::move(cps)}};
}

TaskScene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open scene file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidArgument("scene file " + path.string() + " is not valid JSON: " + e.what());
    }
    return scene_from_json(doc);
}

json TrialResult::to_json() const {
    return {{"task", std::string(to_string(task))},
            {"score", static_cast<int>(score)},
            {"elapsed", elapsed},
            {"attempts", attempts},
            {"log", log}};
}

RobotState make_initial_state(const KinematicChain& chain, const Eigen::VectorXd& q, const TaskScene* scene) {
    RobotState s;
    s.joints = JointState::at(q);
    s.tool_pose = forward_kinematics(chain, q);
    if (scene) {
        for (const SceneObject& o : scene->objects) s.objects[o.id] = o.pose;
    }
    return s;
}

RobotState step(const KinematicChain& chain, RobotState state, const Eigen::VectorXd& qdot, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("step dt must be positive");
    if (qdot.size() != chain.dof()) throw InvalidArgument("joint velocity vector has the wrong size");
    if (!qdot.allFinite()) throw InvalidArgument("joint velocity vector contains non-finite entries");

    const Eigen::VectorXd q0 = state.joints.positions;
    Eigen::VectorXd q = q0;
    for (Eigen::Index i = 0; i < chain.dof(); ++i) {
        const Joint& j = chain.joints()[static_cast<std::size_t>(i)];
        double v = qdot[i];
        if (std::abs(v) > j.velocity_limit) {
            v = std::copysign(j.velocity_limit, v);
            ++state.clamp_events;
        }
        double next = q0[i] + v * dt;
        if (next > j.upper || next < j.lower) {
            next = std::clamp(next, j.lower, j.upper);
            ++state.clamp_events;
        }
        q[i] = next;
    }

    const Eigen::VectorXd realized = (q - q0) / dt;
    const Vector6d tool_rate = jacobian(chain, q0) * realized;
    state.tool_twist.linear = tool_rate.head<3>();
    state.tool_twist.angular = tool_rate.tail<3>();
    state.joints.positions = q;
    state.joints.velocities = realized;
    state.tool_pose = forward_kinematics(chain, q);
    state.sim_time += dt;
    if (state.held_object) state.objects[*state.held_object] = state.tool_pose * state.grasp_offset;
    return state;
}

RobotState grasp_check(RobotState state, const TaskScene& scene) {
    const bool just_closed =
        state.gripper == GripperState::Closed && state.gripper_at_last_check == GripperState::Open;
    const bool just_opened =
        state.gripper == GripperState::Open && state.gripper_at_last_check == GripperState::Closed;
    state.gripper_at_last_check = state.gripper;

    if (just_opened && state.held_object) {
        // The object stays where the tool left it.
        state.objects[*state.held_object] = state.tool_pose * state.grasp_offset;
        state.held_object.reset();
        state.grasp_offset = Pose::identity();
    } else if (just_closed && !state.held_object) {
        for (const GraspZone& zone : scene.grasp_zones) {
            auto it = state.objects.find(zone.object);
            if (it == state.objects.end()) continue;
            if (zone.region_for(it->second).contains(state.tool_pose)) {
                state.held_object = zone.object;
                state.grasp_offset = state.tool_pose.inverse() * it->second;
                break;
            }
        }
    }
    return state;
}

bool checkpoint_satisfied(const Checkpoint& cp, const RobotState& state) {
    if (!cp.tool.contains(state.tool_pose)) return false;
    if (cp.gripper && *cp.gripper != state.gripper) return false;
    if (!cp.held.satisfied_by(state.held_object)) return false;
    if (cp.object) {
        auto it = state.objects.find(cp.object->object);
        if (it == state.objects.end() || !cp.object->region.contains(it->second)) return false;
    }
    if (cp.max_angular_speed && state.tool_twist.angular.norm() > *cp.max_angular_speed) return false;
    return true;
}

TaskProgress advance_task(const TaskScene& scene, const RobotState& state, TaskProgress progress) {
    while (progress.cleared < scene.checkpoints.size() &&
           checkpoint_satisfied(scene.checkpoints[progress.cleared], state)) {
        ++progress.cleared;
        progress.cleared_at.push_back(state.sim_time);
    }
    return progress;
}

TrialResult score_trial(const TaskProgress& progress, double elapsed, const TaskScene& scene) {
    if (!(elapsed >= 0.0) || !std::isfinite(elapsed)) throw InvalidArgument("elapsed time must be finite and non-negative");
    TrialResult r;
    r.task = scene.id;
    if (progress.cleared >= scene.checkpoints.size()) {
        r.score = Score::Full;
    } else if (scene.partial_threshold > 0 && progress.cleared >= scene.partial_threshold) {
        r.score = Score::Partial;
    }
    r.elapsed = r.score == Score::None ? scene.time_limit : std::min(elapsed, scene.time_limit);
    return r;
}

TrialResult best_trial(const std::vector<TrialResult>& trials) {
    if (trials.empty()) throw InvalidArgument("best_trial needs at least one trial");
    if (trials.size() > 2) throw InvalidArgument("a task allows at most two trials");
    TrialResult best = trials.front();
    for (const TrialResult& t : trials) {
        if (static_cast<int>(t.score) > static_cast<int>(best.score) ||
            (t.score == best.score && t.elapsed < best.elapsed)) {
            best = t;
        }
    }
    best.attempts = trials.size();
    return best;
}

} // namespace teleop
