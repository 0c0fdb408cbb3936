#include "teleop/kinematics.hpp"

#include <cmath>

#include "teleop/errors.hpp"

namespace teleop {

namespace {

constexpr double kUnitTolerance = 1e-9;
// Below this |w| the rotation is treated as exactly pi and the axis sign tie-break applies.
constexpr double kHalfTurnW = 1e-12;

bool lexicographically_negative(const Eigen::Vector3d& v) {
    for (int i = 0; i < 3; ++i) {
        if (std::abs(v[i]) > 1e-12) return v[i] < 0.0;
    }
    return false;
}

void check_dimensions(const KinematicChain& chain, const Eigen::VectorXd& q) {
    if (q.size() != chain.dof()) {
        throw InvalidArgument("joint vector has " + std::to_string(q.size()) + " entries, chain '" +
                              chain.name() + "' has " + std::to_string(chain.dof()) + " joints");
    }
    if (!q.allFinite()) throw InvalidArgument("joint vector contains non-finite entries");
}

} // namespace

Pose::Pose(const Eigen::Vector3d& position, const Eigen::Quaterniond& orientation)
    : position_(position), orientation_(orientation.normalized()) {}

Pose Pose::compose(const Pose& other) const {
    return {position_ + orientation_ * other.position_, orientation_ * other.orientation_};
}

Pose Pose::inverse() const {
    const Eigen::Quaterniond inv = orientation_.conjugate();
    return {-(inv * position_), inv};
}

Eigen::Vector3d Pose::transform_point(const Eigen::Vector3d& p) const {
    return position_ + orientation_ * p;
}

Vector6d Twist::stacked() const {
    Vector6d v;
    v << linear, angular;
    return v;
}

bool Twist::is_finite() const { return linear.allFinite() && angular.allFinite(); }

bool Twist::is_exactly_zero() const {
    return (linear.array() == 0.0).all() && (angular.array() == 0.0).all();
}

KinematicChain::KinematicChain(std::string name, std::vector<Joint> joints, Pose tool, Eigen::VectorXd home)
    : name_(std::move(name)), joints_(std::move(joints)), tool_(std::move(tool)), home_(std::move(home)) {
    for (const Joint& j : joints_) {
        if (std::abs(j.axis.norm() - 1.0) > kUnitTolerance) {
            throw InvalidArgument("joint '" + j.name + "' axis is not unit length");
        }
        if (!(j.lower < j.upper)) {
            throw InvalidArgument("joint '" + j.name + "' has lower limit >= upper limit");
        }
        if (!(j.velocity_limit > 0.0)) {
            throw InvalidArgument("joint '" + j.name + "' velocity limit must be positive");
        }
    }
    if (home_.size() == 0) home_ = Eigen::VectorXd::Zero(dof());
    if (home_.size() != dof()) throw InvalidArgument("home configuration size does not match joint count");
    for (Eigen::Index i = 0; i < dof(); ++i) {
        const Joint& j = joints_[static_cast<std::size_t>(i)];
        if (home_[i] < j.lower || home_[i] > j.upper) {
            throw InvalidArgument("home configuration violates limits of joint '" + j.name + "'");
        }
    }
}

Eigen::VectorXd KinematicChain::lower_limits() const {
    Eigen::VectorXd v(dof());
    for (Eigen::Index i = 0; i < dof(); ++i) v[i] = joints_[static_cast<std::size_t>(i)].lower;
    return v;
}

Eigen::VectorXd KinematicChain::upper_limits() const {
    Eigen::VectorXd v(dof());
    for (Eigen::Index i = 0; i < dof(); ++i) v[i] = joints_[static_cast<std::size_t>(i)].upper;
    return v;
}

Eigen::VectorXd KinematicChain::velocity_limits() const {
    Eigen::VectorXd v(dof());
    for (Eigen::Index i = 0; i < dof(); ++i) v[i] = joints_[static_cast<std::size_t>(i)].velocity_limit;
    return v;
}

Eigen::Vector3d rotation_log(const Eigen::Quaterniond& q_in) {
    Eigen::Quaterniond q = q_in.normalized();
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    const Eigen::Vector3d v = q.vec();
    const double s = v.norm();
    if (s < 1e-12) {
        // Small-angle series: angle ~ 2 s / w.
        return 2.0 * v / q.w();
    }
    const double angle = 2.0 * std::atan2(s, q.w());
    Eigen::Vector3d axis = v / s;
    if (q.w() <= kHalfTurnW && lexicographically_negative(axis)) axis = -axis;
    return angle * axis;
}

Eigen::Quaterniond rotation_exp(const Eigen::Vector3d& rotvec) {
    const double angle = rotvec.norm();
    if (angle < 1e-12) {
        return Eigen::Quaterniond(1.0, 0.5 * rotvec.x(), 0.5 * rotvec.y(), 0.5 * rotvec.z()).normalized();
    }
    return Eigen::Quaterniond(Eigen::AngleAxisd(angle, rotvec / angle));
}

Pose forward_kinematics(const KinematicChain& chain, const Eigen::VectorXd& q) {
    check_dimensions(chain, q);
    Pose frame;
    for (Eigen::Index i = 0; i < chain.dof(); ++i) {
        const Joint& j = chain.joints()[static_cast<std::size_t>(i)];
        frame = frame * j.origin * Pose::from_rotation(Eigen::Quaterniond(Eigen::AngleAxisd(q[i], j.axis)));
    }
    return frame * chain.tool();
}

Jacobian jacobian(const KinematicChain& chain, const Eigen::VectorXd& q) {
    check_dimensions(chain, q);
    const Eigen::Index n = chain.dof();
    std::vector<Eigen::Vector3d> axes(static_cast<std::size_t>(n));
    std::vector<Eigen::Vector3d> origins(static_cast<std::size_t>(n));

    Pose frame;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const Joint& j = chain.joints()[k];
        frame = frame * j.origin;
        axes[k] = frame.orientation() * j.axis;
        origins[k] = frame.position();
        frame = frame * Pose::from_rotation(Eigen::Quaterniond(Eigen::AngleAxisd(q[i], j.axis)));
    }
    const Eigen::Vector3d tool_point = (frame * chain.tool()).position();

    Jacobian jac(6, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        jac.block<3, 1>(0, i) = axes[k].cross(tool_point - origins[k]);
        jac.block<3, 1>(3, i) = axes[k];
    }
    return jac;
}

Eigen::VectorXd dls_velocity_ik(const Jacobian& jac, const Twist& twist, double damping) {
    if (!std::isfinite(damping) || damping < 0.0) throw InvalidArgument("damping must be finite and non-negative");
    if (!twist.is_finite()) throw InvalidArgument("twist contains non-finite components");
    if (!jac.allFinite()) throw InvalidArgument("jacobian contains non-finite entries");

    const Eigen::Index n = jac.cols();
    const Vector6d v = twist.stacked();
    if (twist.is_exactly_zero()) return Eigen::VectorXd::Zero(n);

    if (damping == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
        if (qr.rank() < n) {
            throw SingularityError("undamped IK on rank-deficient jacobian (rank " + std::to_string(qr.rank()) +
                                   " of " + std::to_string(n) + ")");
        }
        return qr.solve(v);
    }

    const Eigen::MatrixXd normal =
        jac.transpose() * jac + damping * damping * Eigen::MatrixXd::Identity(n, n);
    return normal.ldlt().solve(jac.transpose() * v);
}

PoseError pose_error(const Pose& current, const Pose& target) {
    PoseError e;
    e.position = target.position() - current.position();
    e.rotation = rotation_log(target.orientation() * current.orientation().conjugate());
    return e;
}

} // namespace teleop
