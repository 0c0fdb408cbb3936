#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "teleop/kinematics.hpp"

namespace teleop::json_io {

using nlohmann::json;

// Field accessors for config files and wire payloads. Every failure raises
// FieldError carrying the dotted path of the offending field.
const json& require(const json& obj, std::string_view key, const std::string& path = {});
double require_number(const json& obj, std::string_view key, const std::string& path = {});
bool require_bool(const json& obj, std::string_view key, const std::string& path = {});
std::string require_string(const json& obj, std::string_view key, const std::string& path = {});

double as_number(const json& v, const std::string& path);
Eigen::Vector3d as_vec3(const json& v, const std::string& path);
Eigen::VectorXd as_vector(const json& v, const std::string& path);
// [w, x, y, z]; must be within 1e-6 of unit norm and is renormalized.
Eigen::Quaterniond as_quaternion(const json& v, const std::string& path);
// {"position": [x,y,z], "orientation": [w,x,y,z]}
Pose as_pose(const json& v, const std::string& path);

json to_json(const Eigen::Vector3d& v);
json to_json(const Eigen::VectorXd& v);
json to_json(const Eigen::Quaterniond& q);
json to_json(const Pose& p);

} // namespace teleop::json_io
