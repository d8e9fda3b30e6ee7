#pragma once

#include <stdexcept>
#include <string>

namespace sic {

/// Broad error category; the CLI maps each category onto its own exit code.
enum class ErrorKind {
  InvalidArgument,
  Geometry,
  Format,
  Io,
  Numeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::InvalidArgument, what) {}
};

class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& what) : Error(ErrorKind::Geometry, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

/// Validation failures of the binary containers (batch, checkpoint, raster).
enum class FormatFault {
  BadMagic,
  UnsupportedVersion,
  TruncatedPayload,
  TrailingData,
  DimensionMismatch,
  Malformed,
};

class FormatError : public Error {
 public:
  FormatError(FormatFault fault, const std::string& what) : Error(ErrorKind::Format, what), fault_(fault) {}
  FormatFault fault() const noexcept { return fault_; }

 private:
  FormatFault fault_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
    case ErrorKind::Numeric: return "numeric";
  }
  return "unknown";
}

}  // namespace sic
