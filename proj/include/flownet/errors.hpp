#pragma once

#include <stdexcept>
#include <string>

namespace flownet {

// Raised by transformations whose preconditions on the graph fail.
struct NotBalancedError : std::runtime_error {
  explicit NotBalancedError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotStronglyConnectedError : std::runtime_error {
  explicit NotStronglyConnectedError(const std::string& msg) : std::runtime_error(msg) {}
};

// Constant terminal flows cannot be reproduced by any controller offset.
struct NoMatchingError : std::runtime_error {
  explicit NoMatchingError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotACycleError : std::runtime_error {
  explicit NotACycleError(const std::string& msg) : std::runtime_error(msg) {}
};

// An operation that requires nonnegative flow intervals saw one that is not.
struct IncompatibleOrientationError : std::runtime_error {
  explicit IncompatibleOrientationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SpecParseError : std::runtime_error {
  explicit SpecParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SimulationError : std::runtime_error {
  explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace flownet
