#pragma once

#include <stdexcept>
#include <string>

namespace rhgcn {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes or component counts disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite input or a numeric failure (NaN loss, diverged state).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Carries the offending line when known (1-based, 0 = unknown).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// API misuse: backward twice, empty index set, noise enabled under gradcheck...
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Requested computation exceeds a configured capability limit (e.g. dense eigensolve cap).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace rhgcn
