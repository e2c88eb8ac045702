#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tailtopo {

// Base of every error raised by the library. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: shapes, ranges, empty bands.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Data that loaded but violates a domain invariant (non-finite, duplicate labels, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A linear-algebra precondition failed even after regularization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tailtopo
