#pragma once

#include <stdexcept>
#include <string>

namespace qsync {

/// Scenario text could not be turned into a valid Scenario.
class LoadError : public std::runtime_error {
 public:
  LoadError(const std::string& what, int line = -1)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// The envelope tracker found no fringe contrast in its scan window.
class TrackingLost : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by callers that require a converged dip fit.
class FitFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qsync
