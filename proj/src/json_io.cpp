#include "teleop/json_io.hpp"

#include <cmath>

#include "teleop/errors.hpp"

namespace teleop::json_io {

namespace {

std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

} // namespace

const json& require(const json& obj, std::string_view key, const std::string& path) {
    if (!obj.is_object()) throw FieldError(path.empty() ? "<root>" : path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw FieldError(join(path, key), "missing field");
    return *it;
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw FieldError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw FieldError(path, "expected a finite number");
    return d;
}

double require_number(const json& obj, std::string_view key, const std::string& path) {
    return as_number(require(obj, key, path), join(path, key));
}

bool require_bool(const json& obj, std::string_view key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_boolean()) throw FieldError(join(path, key), "expected a boolean");
    return v.get<bool>();
}

std::string require_string(const json& obj, std::string_view key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_string()) throw FieldError(join(path, key), "expected a string");
    return v.get<std::string>();
}

Eigen::Vector3d as_vec3(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3) throw FieldError(path, "expected an array of 3 numbers");
    return {as_number(v[0], index_path(path, 0)), as_number(v[1], index_path(path, 1)),
            as_number(v[2], index_path(path, 2))};
}

Eigen::VectorXd as_vector(const json& v, const std::string& path) {
    if (!v.is_array()) throw FieldError(path, "expected an array of numbers");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = as_number(v[i], index_path(path, i));
    return out;
}

Eigen::Quaterniond as_quaternion(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 4) throw FieldError(path, "expected [w, x, y, z]");
    Eigen::Quaterniond q(as_number(v[0], index_path(path, 0)), as_number(v[1], index_path(path, 1)),
                         as_number(v[2], index_path(path, 2)), as_number(v[3], index_path(path, 3)));
    if (std::abs(q.norm() - 1.0) > 1e-6) throw FieldError(path, "quaternion is not unit norm");
    return q.normalized();
}

Pose as_pose(const json& v, const std::string& path) {
    return {as_vec3(require(v, "position", path), join(path, "position")),
            as_quaternion(require(v, "orientation", path), join(path, "orientation"))};
}

json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json to_json(const Eigen::Quaterniond& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

json to_json(const Pose& p) { return {{"position", to_json(p.position())}, {"orientation", to_json(p.orientation())}}; }

} // namespace teleop::json_io
