/// @file errors.hpp
/// @brief Exception hierarchy. Each class maps to one failure stage of the pipeline.
#pragma once

#include <stdexcept>
#include <string>

namespace encl {

/// Precondition of an operation violated by its arguments.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Scene, grid or experiment configuration is inconsistent.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver or time integrator did not produce a valid result.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two independent evaluations of the same quantity disagree.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace encl
