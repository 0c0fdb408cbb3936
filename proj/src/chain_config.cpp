#include "teleop/chain_config.hpp"

#include <cmath>
#include <fstream>

#include "teleop/errors.hpp"
#include "teleop/json_io.hpp"

namespace teleop {

using json_io::json;

KinematicChain chain_from_json(const json& doc) {
    const std::string name = json_io::require_string(doc, "name");
    const json& joints_doc = json_io::require(doc, "joints");
    if (!joints_doc.is_array() || joints_doc.empty()) throw FieldError("joints", "expected a non-empty array");

    std::vector<Joint> joints;
    for (std::size_t i = 0; i < joints_doc.size(); ++i) {
        const std::string path = "joints[" + std::to_string(i) + "]";
        const json& jd = joints_doc[i];
        Joint j;
        j.name = json_io::require_string(jd, "name", path);
        j.axis = json_io::as_vec3(json_io::require(jd, "axis", path), path + ".axis");
        if (std::abs(j.axis.norm() - 1.0) > 1e-9) throw FieldError(path + ".axis", "axis must have unit norm");
        j.origin = json_io::as_pose(json_io::require(jd, "origin", path), path + ".origin");
        const json& limits = json_io::require(jd, "limits", path);
        j.lower = json_io::require_number(limits, "lower", path + ".limits");
        j.upper = json_io::require_number(limits, "upper", path + ".limits");
        j.velocity_limit = json_io::require_number(limits, "velocity", path + ".limits");
        joints.push_back(std::move(j));
    }

    const Pose tool = json_io::as_pose(json_io::require(doc, "tool"), "tool");
    Eigen::VectorXd home;
    if (auto it = doc.find("home"); it != doc.end()) home = json_io::as_vector(*it, "home");
    return KinematicChain(name, std::move(joints), tool, std::move(home));
}

json chain_to_json(const KinematicChain& chain) {
    json joints = json::array();
    for (const Joint& j : chain.joints()) {
        joints.push_back({{"name", j.name},
                          {"axis", json_io::to_json(j.axis)},
                          {"origin", json_io::to_json(j.origin)},
                          {"limits", {{"lower", j.lower}, {"upper", j.upper}, {"velocity", j.velocity_limit}}}});
    }
    return {{"name", chain.name()},
            {"joints", std::move(joints)},
            {"tool", json_io::to_json(chain.tool())},
            {"home", json_io::to_json(chain.home())}};
}

KinematicChain load_chain(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open chain file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidArgument("chain file " + path.string() + " is not valid JSON: " + e.what());
    }
    return chain_from_json(doc);
}

} // namespace teleop
