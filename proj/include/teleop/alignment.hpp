#pragma once

#include <utility>
#include <vector>

#include "teleop/kinematics.hpp"

namespace teleop {

inline constexpr double kDefaultMaxResidual = 0.02;  // m RMS

// Operator-frame to robot-base-frame registration.
struct AnchorTransform {
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    bool anchored = false;
    double residual = 0.0;

    static AnchorTransform unanchored() { return {}; }
    static AnchorTransform identity() { return {Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero(), true, 0.0}; }
    Pose pose() const { return {translation, rotation}; }
};

struct Correspondence {
    Eigen::Vector3d operator_point;
    Eigen::Vector3d robot_point;
};

using CorrespondenceSet = std::vector<Correspondence>;

// Least-squares rigid fit robot ≈ R * operator + t (proper rotation only).
// Throws InvalidArgument for fewer than 3 pairs, DegenerateConfiguration for
// collinear or coincident points, RegistrationRejected when the RMS residual
// exceeds max_residual.
AnchorTransform register_correspondences(const CorrespondenceSet& pairs, double max_residual = kDefaultMaxResidual);

// RMS distance between transformed operator points and robot points.
double registration_residual(const CorrespondenceSet& pairs, const Eigen::Quaterniond& rotation,
                             const Eigen::Vector3d& translation);

// Throws NotAnchored when anchor.anchored is false.
Pose apply(const AnchorTransform& anchor, const Pose& pose);

} // namespace teleop
