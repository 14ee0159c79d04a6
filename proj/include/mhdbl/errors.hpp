#pragma once

#include <stdexcept>
#include <string>

namespace mhdbl {

// Configuration or precondition violated by user input. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Numeric failure during a run (CFL violation, NaN, blow-up). Maps to exit code 3.
class NumericError : public std::runtime_error {
public:
  NumericError(const std::string& what, std::string constraint = {}, double last_valid_time = 0.0)
      : std::runtime_error(what), constraint_(std::move(constraint)), last_valid_time_(last_valid_time) {}

  const std::string& constraint() const noexcept { return constraint_; }
  double last_valid_time() const noexcept { return last_valid_time_; }

private:
  std::string constraint_;
  double last_valid_time_;
};

// File system or format failure. Maps to exit code 4.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Mismatched grids, unsupported orders and similar programming errors.
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace mhdbl
