#include "teleop/alignment.hpp"

#include <cmath>

#include "teleop/errors.hpp"

namespace teleop {

namespace {

// Second singular value of the centered cloud vanishes for collinear sets.
bool spans_a_plane(const Eigen::Matrix3Xd& centered) {
    const Eigen::JacobiSVD<Eigen::Matrix3Xd> svd(centered);
    const Eigen::Vector3d s = svd.singularValues();
    return s[0] > 1e-12 && s[1] > 1e-9 * s[0];
}

} // namespace

double registration_residual(const CorrespondenceSet& pairs, const Eigen::Quaterniond& rotation,
                             const Eigen::Vector3d& translation) {
    if (pairs.empty()) return 0.0;
    double sum = 0.0;
    for (const Correspondence& c : pairs) {
        sum += (rotation * c.operator_point + translation - c.robot_point).squaredNorm();
    }
    return std::sqrt(sum / static_cast<double>(pairs.size()));
}

AnchorTransform register_correspondences(const CorrespondenceSet& pairs, double max_residual) {
    if (pairs.size() < 3) {
        throw InvalidArgument("registration needs at least 3 correspondences, got " + std::to_string(pairs.size()));
    }
    const auto n = static_cast<Eigen::Index>(pairs.size());
    Eigen::Matrix3Xd op(3, n);
    Eigen::Matrix3Xd rb(3, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Correspondence& c = pairs[static_cast<std::size_t>(i)];
        if (!c.operator_point.allFinite() || !c.robot_point.allFinite()) {
            throw InvalidArgument("correspondence " + std::to_string(i) + " has non-finite coordinates");
        }
        op.col(i) = c.operator_point;
        rb.col(i) = c.robot_point;
    }
    const Eigen::Vector3d op_mean = op.rowwise().mean();
    const Eigen::Vector3d rb_mean = rb.rowwise().mean();
    op.colwise() -= op_mean;
    rb.colwise() -= rb_mean;
    if (!spans_a_plane(op) || !spans_a_plane(rb)) {
        throw DegenerateConfiguration("correspondences are collinear or coincident");
    }

    const Eigen::Matrix3d cross = op * rb.transpose();
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
    fix(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Eigen::Matrix3d rot = svd.matrixV() * fix * svd.matrixU().transpose();

    AnchorTransform anchor;
    anchor.rotation = Eigen::Quaterniond(rot).normalized();
    anchor.translation = rb_mean - rot * op_mean;
    anchor.residual = registration_residual(pairs, anchor.rotation, anchor.translation);
    if (anchor.residual > max_residual) {
        throw RegistrationRejected("registration residual " + std::to_string(anchor.residual) + " m exceeds " +
                                       std::to_string(max_residual) + " m",
                                   anchor.residual);
    }
    anchor.anchored = true;
    return anchor;
}

Pose apply(const AnchorTransform& anchor, const Pose& pose) {
    if (!anchor.anchored) throw NotAnchored();
    return anchor.pose() * pose;
}

} // namespace teleop
