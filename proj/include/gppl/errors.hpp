#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gppl {

/// Raised when a factorization fails even after the maximum jitter has been added.
class SingularModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. Carries the 1-based line number when
/// the problem came from a file (0 otherwise).
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace gppl
