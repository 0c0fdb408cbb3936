#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace teleop {

// Dimension mismatches, malformed configuration values, empty inputs.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Undamped IK request on a rank-deficient Jacobian.
class SingularityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Collinear or coincident correspondences handed to registration.
class DegenerateConfiguration : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Registration succeeded numerically but the RMS residual exceeds the accepted bound.
class RegistrationRejected : public std::runtime_error {
  public:
    RegistrationRejected(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

class NotAnchored : public std::runtime_error {
  public:
    NotAnchored() : std::runtime_error("operator frame is not anchored to the robot base") {}
};

// Line-oriented file problems (demo logs, trajectories). Line numbers are 1-based.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, const std::string& detail)
        : std::runtime_error("line " + std::to_string(line) + ": " + detail), line_(line) {}
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

// Wire payload or config document missing / mistyping a field.
class FieldError : public std::runtime_error {
  public:
    FieldError(std::string field, const std::string& detail)
        : std::runtime_error(field + ": " + detail), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace teleop
