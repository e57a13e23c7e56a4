#pragma once

#include <stdexcept>
#include <string>

namespace phnmf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-conformable dimensions or an out-of-range rank.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input that violates a documented precondition (negative entries,
/// malformed schema, bad parameter values).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. Carries the 1-based line number when known.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : ValidationError(line ? what + " (line " + std::to_string(line) + ")"
                             : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File system failures; the message names the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace phnmf
