#pragma once

#include <stdexcept>
#include <string>

namespace avasd {

enum class ErrorKind {
  kShape,     // tensor extents do not line up
  kArgument,  // caller passed an out-of-contract value
  kFormat,    // malformed file or record
  kIo,        // filesystem failure
  kNumeric,   // NaN/Inf or a degenerate statistic
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by this library derives from Error, so callers can
// map the kind onto an exit code without catching std::exception wholesale.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& message) : Error(ErrorKind::kShape, message) {}
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& message)
      : Error(ErrorKind::kArgument, message) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message) : Error(ErrorKind::kFormat, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::kIo, message) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message) : Error(ErrorKind::kNumeric, message) {}
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kArgument: return "argument";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kNumeric: return "numeric";
  }
  return "unknown";
}

}  // namespace avasd
