#pragma once

#include <stdexcept>
#include <string>

namespace sadd {

// Error taxonomy. The CLI maps kinds onto process exit codes
// (config -> 1, data/io/format/shape/graph -> 2, numeric -> 3).
enum class ErrorKind { Shape, Config, Data, Io, Format, Graph, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& m) : Error(ErrorKind::Shape, m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error(ErrorKind::Config, m) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& m) : Error(ErrorKind::Data, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::Io, m) {}
};

// Autodiff graph misuse (backward on a detached tensor, repeated backward).
class GraphError : public Error {
 public:
  explicit GraphError(const std::string& m) : Error(ErrorKind::Graph, m) {}
};

// Non-finite values where finite ones are required (training abort).
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& m) : Error(ErrorKind::Numeric, m) {}
};

// Binary file faults. Tests match on the exact fault.
enum class FormatFault {
  BadMagic,
  BadVersion,
  Truncated,
  ExtentOverflow,
  ZeroExtent,
  Corrupt,
};

class FormatError : public Error {
 public:
  FormatError(FormatFault fault, const std::string& m)
      : Error(ErrorKind::Format, m), fault_(fault) {}
  FormatFault fault() const noexcept { return fault_; }

 private:
  FormatFault fault_;
};

}  // namespace sadd
