#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "teleop/kinematics.hpp"

namespace teleop {

// Chain documents look like
//   { "name": "...",
//     "joints": [ { "name": "...", "axis": [x,y,z],
//                   "origin": { "position": [...], "orientation": [w,x,y,z] },
//                   "limits": { "lower": rad, "upper": rad, "velocity": rad/s } }, ... ],
//     "tool": { "position": [...], "orientation": [...] },
//     "home": [q0, ...] }            // optional
// Every field except "home" is required.
KinematicChain chain_from_json(const nlohmann::json& doc);
nlohmann::json chain_to_json(const KinematicChain& chain);
KinematicChain load_chain(const std::filesystem::path& path);

} // namespace teleop
