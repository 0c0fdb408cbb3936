#include "teleop/bridge.hpp"

#include <cmath>

#include "teleop/errors.hpp"
#include "teleop/json_io.hpp"

namespace teleop {

using json_io::json;

namespace {

bool is_stream(MessageType t) { return t == MessageType::PoseTarget || t == MessageType::DeviceTwist; }

std::uint64_t broadcasts_before(std::uint64_t ticks, const LoopConfig& cfg) {
    return static_cast<std::uint64_t>(
        std::floor(static_cast<double>(ticks) * cfg.broadcast_rate / cfg.control_rate + 1e-9));
}

} // namespace

void LoopConfig::validate() const {
    if (!(control_rate > 0.0) || !std::isfinite(control_rate)) throw InvalidArgument("control_rate must be positive");
    if (!(broadcast_rate > 0.0) || broadcast_rate > control_rate) {
        throw InvalidArgument("broadcast_rate must be positive and no faster than control_rate");
    }
    if (!std::isfinite(damping) || damping < 0.0) throw InvalidArgument("damping must be finite and non-negative");
    if (!(watchdog > 0.0)) throw InvalidArgument("watchdog window must be positive");
    if (!(deadband >= 0.0 && deadband < 1.0)) throw InvalidArgument("deadband must lie in [0, 1)");
    if (!(max_residual > 0.0)) throw InvalidArgument("max_residual must be positive");
    limits.validate();
}

RobotState integrate_twist(const KinematicChain& chain, RobotState state, const Twist& twist, double damping,
                           double dt) {
    Eigen::VectorXd qdot = Eigen::VectorXd::Zero(chain.dof());
    if (!twist.is_exactly_zero()) qdot = dls_velocity_ik(jacobian(chain, state.joints.positions), twist, damping);
    return step(chain, std::move(state), qdot, dt);
}

Bridge::Bridge(KinematicChain chain, std::optional<TaskScene> scene, LoopConfig config)
    : chain_(std::move(chain)), scene_(std::move(scene)), config_(config) {
    config_.validate();
    if (scene_) scene_->validate();
    anchor_ = config_.require_anchor ? AnchorTransform::unanchored() : AnchorTransform::identity();
    robot_ = make_initial_state(chain_, chain_.home(), scene_ ? &*scene_ : nullptr);
    session_.target = robot_.tool_pose;
}

WireMessage Bridge::reject_frame(const std::string& field, const std::string& detail) const {
    return make_error(std::nullopt, sim_time(), field == "type" ? "unknown_type" : "malformed_envelope",
                      field + ": " + detail);
}

std::vector<WireMessage> Bridge::handle_message(const WireMessage& msg, ConnectionId conn) {
    const double now = sim_time();
    if (auto it = last_seq_.find(conn); it != last_seq_.end() && msg.seq <= it->second) {
        return {make_error(msg.seq, now, "duplicate_seq",
                           "seq " + std::to_string(msg.seq) + " is not above " + std::to_string(it->second) +
                               "; message dropped")};
    }
    last_seq_[conn] = msg.seq;

    try {
        switch (msg.type) {
        case MessageType::PoseTarget: {
            const SphereInput input = decode_pose_target(msg);
            if (input.engaged && !anchor_.anchored) {
                return {make_error(msg.seq, now, "not_anchored", "engagement requires a registered anchor")};
            }
            const Pose target = anchor_.anchored ? sphere_to_target(input, anchor_.pose()).target : input.pose;
            const std::uint64_t dropped = session_.stale_dropped;
            session_ = update_target(session_, target, input.engaged, input.timestamp);
            if (session_.stale_dropped != dropped) return {make_ack(msg.seq, now, {{"dropped", "stale"}})};
            last_pose_input_ = now;
            device_.reset();
            return {make_ack(msg.seq, now, {{"engaged", session_.engaged}})};
        }
        case MessageType::DeviceTwist: {
            const DeviceTwist d = decode_device_twist(msg);
            if (d.button && !device_button_) {
                const auto action = session_.gripper == GripperState::Open ? GripperAction::Close : GripperAction::Open;
                session_ = apply_gripper_event(session_, GripperEvent::button(action));
            }
            device_button_ = d.button;
            device_ = d;
            last_device_input_ = now;
            session_.engaged = false;
            return {make_ack(msg.seq, now)};
        }
        case MessageType::Gripper:
            session_ = apply_gripper_event(session_, decode_gripper(msg));
            return {make_ack(msg.seq, now, {{"gripper", std::string(to_string(session_.gripper))}})};
        case MessageType::SpeedMode:
            session_ = set_speed_mode(session_, decode_speed_mode(msg));
            return {make_ack(msg.seq, now, {{"speed_mode", std::string(to_string(session_.speed_mode))}})};
        case MessageType::Anchor: {
            const CorrespondenceSet pairs = decode_anchor(msg);
            try {
                anchor_ = register_correspondences(pairs, config_.max_residual);
            } catch (const InvalidArgument& e) {
                return {make_error(msg.seq, now, "invalid_argument", e.what())};
            } catch (const DegenerateConfiguration& e) {
                return {make_error(msg.seq, now, "degenerate_configuration", e.what())};
            } catch (const RegistrationRejected& e) {
                return {make_error(msg.seq, now, "registration_rejected", e.what())};
            }
            // Re-anchoring halts any motion in flight.
            session_.engaged = false;
            device_.reset();
            return {make_ack(msg.seq, now, {{"residual", anchor_.residual}})};
        }
        case MessageType::TaskControl:
            return handle_task_control(msg);
        case MessageType::State:
        case MessageType::Ack:
        case MessageType::Error:
            return {make_error(msg.seq, now, "unexpected_type",
                               "'" + std::string(to_string(msg.type)) + "' is server-to-client only")};
        }
    } catch (const FieldError& e) {
        return {make_error(msg.seq, now, "malformed_payload", e.what())};
    }
    return {};
}

std::vector<WireMessage> Bridge::handle_task_control(const WireMessage& msg) {
    const double now = sim_time();
    const TaskControl tc = decode_task_control(msg);
    if (!scene_) return {make_error(msg.seq, now, "no_scene", "server was started without a task scene")};
    if (tc.task != scene_->id) {
        return {make_error(msg.seq, now, "scene_mismatch",
                           "loaded scene is " + std::string(to_string(scene_->id)))};
    }
    switch (tc.command) {
    case TaskCommand::Start:
        start_trial();
        break;
    case TaskCommand::SecondAttempt:
        if (attempt_ == 0) return {make_error(msg.seq, now, "no_trial", "no first attempt to follow up")};
        if (trial_active_) finish_trial();
        if (trials_.size() >= 2) return {make_error(msg.seq, now, "no_attempts_left", "both attempts used")};
        begin_attempt(2);
        break;
    case TaskCommand::Reset:
        trial_active_ = false;
        attempt_ = 0;
        trials_.clear();
        progress_ = {};
        reset_world();
        break;
    }
    return {make_ack(msg.seq, now, {{"task", std::string(to_string(scene_->id))}, {"attempt", attempt_}})};
}

void Bridge::reset_world() {
    const std::uint64_t clamps = robot_.clamp_events;
    robot_ = make_initial_state(chain_, chain_.home(), scene_ ? &*scene_ : nullptr);
    robot_.sim_time = sim_time();
    robot_.clamp_events = clamps;
    session_.engaged = false;
    session_.target = robot_.tool_pose;
    session_.gripper = GripperState::Open;
    device_.reset();
    pending_reset_ = chain_.home();
}

void Bridge::begin_attempt(std::size_t attempt) {
    reset_world();
    progress_ = {};
    trial_active_ = true;
    trial_start_ = sim_time();
    attempt_ = attempt;
}

void Bridge::start_trial() {
    if (!scene_) throw InvalidArgument("no task scene loaded");
    trials_.clear();
    begin_attempt(1);
}

std::optional<TrialResult> Bridge::finish_trial() {
    if (!trial_active_) return std::nullopt;
    TrialResult r = score_trial(progress_, sim_time() - trial_start_, *scene_);
    r.attempts = attempt_;
    trials_.push_back(r);
    trial_active_ = false;
    return r;
}

Bridge::TickOutput Bridge::tick() {
    TickOutput out;
    const double now = sim_time();
    const double dt = config_.period();

    if (session_.engaged && now - last_pose_input_ > config_.watchdog) {
        session_.engaged = false;
        ++watchdog_trips_;
        out.events.push_back(make_error(std::nullopt, now, "watchdog", "no pose input within the watchdog window"));
    }
    if (device_ && now - last_device_input_ > config_.watchdog) {
        device_.reset();
        ++watchdog_trips_;
        out.events.push_back(make_error(std::nullopt, now, "watchdog", "no device input within the watchdog window"));
    }

    Twist cmd = device_ ? spacemouse_to_twist(*device_, robot_.tool_pose.orientation(), config_.limits,
                                              session_.speed_mode, config_.deadband)
                        : control_tick(session_, robot_.tool_pose, config_.limits);
    RobotState next;
    try {
        next = integrate_twist(chain_, robot_, cmd, config_.damping, dt);
    } catch (const SingularityError& e) {
        cmd = Twist::zero();
        next = integrate_twist(chain_, robot_, cmd, config_.damping, dt);
        out.events.push_back(make_error(std::nullopt, now, "ik_singular", e.what()));
    }

    ++ticks_;
    next.sim_time = sim_time();
    next.gripper = session_.gripper;
    if (scene_) {
        next = grasp_check(std::move(next), *scene_);
    } else {
        next.gripper_at_last_check = next.gripper;
    }
    robot_ = std::move(next);

    if (trial_active_) {
        progress_ = advance_task(*scene_, robot_, progress_);
        if (progress_.complete(*scene_) || sim_time() - trial_start_ >= scene_->time_limit - 1e-9) {
            out.finished_trial = finish_trial();
        }
    }

    if (recorder_) {
        DemoRecord rec;
        rec.tick = ticks_;
        rec.sim_time = robot_.sim_time;
        rec.joints = robot_.joints.positions;
        rec.reset_joints = pending_reset_;
        rec.tool = robot_.tool_pose;
        rec.twist = cmd;
        rec.engaged = session_.engaged || device_.has_value();
        rec.gripper = robot_.gripper;
        rec.speed_mode = session_.speed_mode;
        if (trial_active_ || out.finished_trial) rec.task = scene_->id;
        recorder_(rec);
    }
    pending_reset_.reset();

    if (broadcasts_before(ticks_, config_) > broadcasts_before(ticks_ - 1, config_)) out.state = state_message();
    out.commanded = cmd;
    return out;
}

WireMessage Bridge::state_message() const {
    json progress = nullptr;
    if (scene_) {
        progress = {{"task", std::string(to_string(scene_->id))},
                    {"active", trial_active_},
                    {"attempt", attempt_},
                    {"cleared", progress_.cleared},
                    {"total", scene_->checkpoints.size()},
                    {"elapsed", trial_active_ ? sim_time() - trial_start_ : 0.0}};
        if (progress_.cleared < scene_->checkpoints.size()) progress["next"] = scene_->checkpoints[progress_.cleared].name;
        if (!trials_.empty()) progress["last_result"] = trials_.back().to_json();
    }
    WireMessage m;
    m.type = MessageType::State;
    m.seq = ticks_;
    m.timestamp = sim_time();
    m.payload = {{"time", sim_time()},
                 {"joints", json_io::to_json(robot_.joints.positions)},
                 {"tool", json_io::to_json(robot_.tool_pose)},
                 {"gripper", std::string(to_string(robot_.gripper))},
                 {"held_object", robot_.held_object ? json(*robot_.held_object) : json(nullptr)},
                 {"engaged", session_.engaged},
                 {"anchored", anchor_.anchored},
                 {"speed_mode", std::string(to_string(session_.speed_mode))},
                 {"task_progress", std::move(progress)}};
    return m;
}

void Mailbox::push(ConnectionId conn, WireMessage msg) {
    std::lock_guard lock(mutex_);
    if (is_stream(msg.type)) {
        for (auto it = queue_.begin(); it != queue_.end(); ++it) {
            if (it->conn == conn && it->msg.type == msg.type) {
                superseded_.push_back(std::move(*it));
                queue_.erase(it);
                break;
            }
        }
    }
    queue_.push_back({conn, std::move(msg)});
}

Mailbox::Drained Mailbox::drain() {
    std::lock_guard lock(mutex_);
    Drained d;
    d.deliver.swap(queue_);
    d.superseded.swap(superseded_);
    return d;
}

void BridgeSink::deliver(const TrajectoryEvent& event) {
    ++seq_;
    WireMessage msg = std::visit(
        [&](const auto& p) -> WireMessage {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, SphereInput>) {
                SphereInput s = p;
                s.timestamp = event.timestamp;
                return encode_pose_target(seq_, s);
            } else if constexpr (std::is_same_v<T, DeviceTwist>) {
                return encode_device_twist(seq_, event.timestamp, p);
            } else if constexpr (std::is_same_v<T, GripperEvent>) {
                return encode_gripper(seq_, event.timestamp, p);
            } else {
                return encode_speed_mode(seq_, event.timestamp, p);
            }
        },
        event.payload);
    for (const WireMessage& reply : bridge_.handle_message(msg)) {
        if (reply.type == MessageType::Error) ++rejected_;
    }
}

bool BridgeSink::tick(double) { return !bridge_.tick().finished_trial.has_value(); }

BenchResult run_bench(const KinematicChain& chain, const TaskScene& scene, const ScriptedTrajectory& traj,
                      LoopConfig config, std::function<void(const DemoRecord&)> recorder) {
    config.require_anchor = false;
    Bridge bridge(chain, scene, config);
    if (recorder) bridge.set_recorder(std::move(recorder));
    bridge.start_trial();
    BridgeSink sink(bridge);

    BenchResult result;
    result.replay = replay(traj, sink, config.control_rate, scene.time_limit);
    bridge.finish_trial();
    result.trials = bridge.trials();
    result.best = best_trial(result.trials);
    result.clamp_events = bridge.robot().clamp_events;
    return result;
}

} // namespace teleop
