#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "teleop/bridge.hpp"

namespace teleop {

// Demonstration log: line-delimited JSON. The first line is a header that
// makes the file self-contained for replay:
//   {"header": {"chain": {...}, "damping": l, "control_rate": hz, "initial_joints": [...], "scene": id|null}}
// followed by one DemoRecord per control tick.
struct DemoHeader {
    nlohmann::json chain;
    double damping = kDefaultDamping;
    double control_rate = 50.0;
    Eigen::VectorXd initial_joints;
    std::optional<TaskId> scene;
};

struct Demo {
    std::optional<DemoHeader> header;  // absent only for an empty file
    std::vector<DemoRecord> records;
};

nlohmann::json demo_record_to_json(const DemoRecord& rec);
DemoRecord demo_record_from_json(const nlohmann::json& doc);

class DemoWriter {
  public:
    DemoWriter(const std::filesystem::path& path, const DemoHeader& header);
    void write(const DemoRecord& rec);
    std::size_t written() const noexcept { return written_; }

  private:
    std::ofstream out_;
    std::size_t written_ = 0;
};

DemoHeader make_demo_header(const Bridge& bridge);

// Throws ParseError with the 1-based line of the first corrupt or truncated record.
Demo read_demo(std::istream& in);
Demo load_demo(const std::filesystem::path& path);

struct DemoReplay {
    std::vector<Eigen::VectorXd> joints;  // reconstructed, one per record
    std::size_t mismatched_ticks = 0;     // records whose joints differ bitwise
    double max_deviation = 0.0;           // max |reconstructed - logged| over all joints
    bool bitwise_equal() const { return mismatched_ticks == 0; }
};

// Feeds the logged commanded twists through a fresh simulator built from the
// header's chain and compares every reconstructed joint vector to the log.
DemoReplay replay_demo(const Demo& demo);

} // namespace teleop
