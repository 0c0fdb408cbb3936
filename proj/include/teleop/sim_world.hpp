#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "teleop/control.hpp"
#include "teleop/kinematics.hpp"

namespace teleop {

enum class TaskId { Pour, PegInHole, RingOnPeg, Bookshelf };

std::string_view to_string(TaskId id);
// Accepts the canonical names (POUR, PEG_IN_HOLE, RING_ON_PEG, BOOKSHELF),
// case-insensitively and with '-' in place of '_'.
std::optional<TaskId> parse_task_id(std::string_view text);

inline constexpr double kTrialTimeLimit = 180.0;

struct RobotState {
    JointState joints;
    Pose tool_pose;
    GripperState gripper = GripperState::Open;
    std::optional<std::string> held_object;
    double sim_time = 0.0;

    std::map<std::string, Pose> objects;
    Pose grasp_offset;                                // tool^-1 * object while holding
    GripperState gripper_at_last_check = GripperState::Open;
    Twist tool_twist;                                 // realized over the last step
    std::uint64_t clamp_events = 0;
};

// Pose region: position within `position_tolerance` meters and relative
// rotation angle within `orientation_tolerance` radians of `center`.
struct Region {
    Pose center;
    double position_tolerance = 0.01;
    double orientation_tolerance = 0.1;

    bool contains(const Pose& pose) const;
};

struct HeldRequirement {
    enum class Kind { Any, Nothing, Object };
    Kind kind = Kind::Any;
    std::string object;

    bool satisfied_by(const std::optional<std::string>& held) const;
};

struct ObjectRequirement {
    std::string object;
    Region region;
};

struct Checkpoint {
    std::string name;
    Region tool;
    std::optional<GripperState> gripper;
    HeldRequirement held;
    std::optional<ObjectRequirement> object;
    std::optional<double> max_angular_speed;  // rad/s, realized tool rate
};

// Tool pose relative to the object frame from which closing the gripper grasps it.
struct GraspZone {
    std::string object;
    std::string name;
    Pose offset;
    double position_tolerance = 0.015;
    double orientation_tolerance = 0.2;

    Region region_for(const Pose& object_pose) const;
};

struct SceneObject {
    std::string id;
    Pose pose;
};

struct TaskScene {
    TaskId id = TaskId::Pour;
    std::vector<SceneObject> objects;
    std::vector<GraspZone> grasp_zones;
    std::vector<Checkpoint> checkpoints;
    double time_limit = kTrialTimeLimit;
    std::size_t partial_threshold = 1;

    // Throws InvalidArgument on empty checkpoints, non-positive tolerances,
    // references to unknown objects, or a threshold beyond the checkpoint count.
    void validate() const;
};

TaskScene scene_from_json(const nlohmann::json& doc);
nlohmann::json scene_to_json(const TaskScene& scene);
TaskScene load_scene(const std::filesystem::path& path);

struct TaskProgress {
    std::size_t cleared = 0;
    std::vector<double> cleared_at;  // sim time each checkpoint was cleared

    bool complete(const TaskScene& scene) const { return cleared >= scene.checkpoints.size(); }
};

enum class Score : int { None = 0, Partial = 50, Full = 100 };

struct TrialResult {
    TaskId task = TaskId::Pour;
    Score score = Score::None;
    double elapsed = 0.0;
    std::size_t attempts = 1;
    std::string log;  // event log reference, e.g. a demo file path

    nlohmann::json to_json() const;
};

RobotState make_initial_state(const KinematicChain& chain, const Eigen::VectorXd& q,
                              const TaskScene* scene = nullptr);

// Explicit Euler step with per-joint velocity clamping followed by position
// clamping. Each clamped joint bumps clamp_events. A held object follows the tool.
RobotState step(const KinematicChain& chain, RobotState state, const Eigen::VectorXd& qdot, double dt);

// Attaches an object when the gripper has just closed inside one of its grasp
// zones, detaches the held object when the gripper has just opened.
RobotState grasp_check(RobotState state, const TaskScene& scene);

bool checkpoint_satisfied(const Checkpoint& cp, const RobotState& state);

// Clears consecutive satisfied checkpoints starting at progress.cleared.
TaskProgress advance_task(const TaskScene& scene, const RobotState& state, TaskProgress progress);

TrialResult score_trial(const TaskProgress& progress, double elapsed, const TaskScene& scene);

// Highest score wins, ties go to the shorter trial. Accepts one or two trials.
TrialResult best_trial(const std::vector<TrialResult>& trials);

} // namespace teleop
