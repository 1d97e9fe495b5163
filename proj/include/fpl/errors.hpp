#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fpl {

/// Bad input to an operation: wrong length, NaN, value out of range.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called in a state that does not support it, or an
/// internal invariant (for instance a non-increasing learning rate) broke.
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The requested computation is outside what the chosen method supports.
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number of the offending row.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t row, const std::string& what)
      : std::runtime_error("line " + std::to_string(row) + ": " + what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace fpl
