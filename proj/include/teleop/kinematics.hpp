#pragma once

#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace teleop {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

inline constexpr double kDefaultDamping = 0.01;

// Rigid transform: position in meters plus unit quaternion. The quaternion is
// renormalized on construction and after every composition, so accumulated
// products never drift off the unit sphere.
class Pose {
  public:
    Pose() = default;
    Pose(const Eigen::Vector3d& position, const Eigen::Quaterniond& orientation);

    static Pose identity() { return {}; }
    static Pose from_translation(const Eigen::Vector3d& t) { return {t, Eigen::Quaterniond::Identity()}; }
    static Pose from_rotation(const Eigen::Quaterniond& q) { return {Eigen::Vector3d::Zero(), q}; }

    const Eigen::Vector3d& position() const noexcept { return position_; }
    const Eigen::Quaterniond& orientation() const noexcept { return orientation_; }
    Eigen::Matrix3d rotation_matrix() const { return orientation_.toRotationMatrix(); }

    // this ∘ other: applies `other` first, then this.
    Pose compose(const Pose& other) const;
    Pose inverse() const;
    Eigen::Vector3d transform_point(const Eigen::Vector3d& p) const;

    friend Pose operator*(const Pose& a, const Pose& b) { return a.compose(b); }

  private:
    Eigen::Vector3d position_ = Eigen::Vector3d::Zero();
    Eigen::Quaterniond orientation_ = Eigen::Quaterniond::Identity();
};

// Base-frame spatial velocity of the tool point.
struct Twist {
    Eigen::Vector3d linear = Eigen::Vector3d::Zero();
    Eigen::Vector3d angular = Eigen::Vector3d::Zero();

    static Twist zero() { return {}; }
    Vector6d stacked() const;
    bool is_finite() const;
    bool is_exactly_zero() const;
};

struct JointState {
    Eigen::VectorXd positions;
    Eigen::VectorXd velocities;

    static JointState at(const Eigen::VectorXd& q) { return {q, Eigen::VectorXd::Zero(q.size())}; }
};

// Revolute joint in URDF convention: the child frame is origin * Rot(axis, q)
// relative to the parent frame.
struct Joint {
    std::string name;
    Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
    Pose origin;
    double lower = -std::numbers::pi;
    double upper = std::numbers::pi;
    double velocity_limit = 1.0;
};

class KinematicChain {
  public:
    // Throws InvalidArgument when an axis is not unit length or a limit pair is inverted.
    KinematicChain(std::string name, std::vector<Joint> joints, Pose tool,
                   Eigen::VectorXd home = {});

    const std::string& name() const noexcept { return name_; }
    const std::vector<Joint>& joints() const noexcept { return joints_; }
    const Pose& tool() const noexcept { return tool_; }
    // Start configuration for trials; zeros when the config omits it.
    const Eigen::VectorXd& home() const noexcept { return home_; }
    Eigen::Index dof() const noexcept { return static_cast<Eigen::Index>(joints_.size()); }

    Eigen::VectorXd lower_limits() const;
    Eigen::VectorXd upper_limits() const;
    Eigen::VectorXd velocity_limits() const;

  private:
    std::string name_;
    std::vector<Joint> joints_;
    Pose tool_;
    Eigen::VectorXd home_;
};

// Rotation vector (axis * angle) with angle in [0, pi]. At exactly pi the axis
// sign is chosen so the vector is the lexicographically larger of the two.
Eigen::Vector3d rotation_log(const Eigen::Quaterniond& q);
Eigen::Quaterniond rotation_exp(const Eigen::Vector3d& rotvec);

Pose forward_kinematics(const KinematicChain& chain, const Eigen::VectorXd& q);
inline Pose forward_kinematics(const KinematicChain& chain, const JointState& state) {
    return forward_kinematics(chain, state.positions);
}

// Geometric Jacobian at the tool origin, base-frame coordinates.
// Rows 0-2 linear, rows 3-5 angular.
Jacobian jacobian(const KinematicChain& chain, const Eigen::VectorXd& q);
inline Jacobian jacobian(const KinematicChain& chain, const JointState& state) {
    return jacobian(chain, state.positions);
}

// Solves (J^T J + damping^2 I) qdot = J^T v.
// damping == 0 on a rank-deficient J throws SingularityError.
Eigen::VectorXd dls_velocity_ik(const Jacobian& jac, const Twist& twist, double damping = kDefaultDamping);

struct PoseError {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();  // target - current, base frame
    Eigen::Vector3d rotation = Eigen::Vector3d::Zero();  // log(target * current^-1), base frame
};

PoseError pose_error(const Pose& current, const Pose& target);

} // namespace teleop
