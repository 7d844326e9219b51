#pragma once

#include <stdexcept>
#include <string>

namespace blockdep {

/// Rejected input: bad config, violated precondition, failed invariant check.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative procedure failed to reach its tolerance, or too many work units did.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace blockdep
