#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zeroshot {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line (or row) number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Inputs that are well-formed but inconsistent (unknown ids, bad labels, widths).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or precondition on caller-supplied settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Conformability failure inside the numeric core.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A forward value became NaN or infinite.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace zeroshot
