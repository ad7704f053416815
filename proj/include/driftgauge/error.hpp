#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace driftgauge {

// Bad argument to a constructor or operation (out-of-range face, sigma <= 0, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data that violates a documented contract. Carries the 1-based line
// number when the data came from a line-oriented file.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what,
                           std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(line ? "line " + std::to_string(*line) + ": " + what
                                : what),
        line_(line) {}

  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  std::optional<std::size_t> line_;
};

// A numerical state the algorithms cannot continue from: a tempered Dirichlet
// concentration collapsing to zero, a rank-deficient spectrum, identical points.
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace driftgauge
