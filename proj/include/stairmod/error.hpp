#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stairmod {

enum class ErrorKind {
  EmptyInput,
  InvalidRotation,
  InvalidArgument,
  ParseError,
  IoError,
  DegenerateSpec,
  MissingNormal,
  InvalidAssignment,
  NoTreadsDetected,
  InsufficientPoints,
  NoPlaneFound,
  DegenerateGeometry,
  InsufficientSteps,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidRotation: return "InvalidRotation";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::DegenerateSpec: return "DegenerateSpec";
    case ErrorKind::MissingNormal: return "MissingNormal";
    case ErrorKind::InvalidAssignment: return "InvalidAssignment";
    case ErrorKind::NoTreadsDetected: return "NoTreadsDetected";
    case ErrorKind::InsufficientPoints: return "InsufficientPoints";
    case ErrorKind::NoPlaneFound: return "NoPlaneFound";
    case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::InsufficientSteps: return "InsufficientSteps";
  }
  return "Unknown";
}

/// Domain error raised by every stairmod operation. `kind()` is stable and is
/// what the CLI prints; `what()` carries the human-readable context.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// ParseError that remembers the 1-based line it was raised on.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Prefixes the message of a domain error with pipeline-stage context while
/// keeping its kind.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& context) {
  throw Error(e.kind(), context + ": " + e.detail());
}

}  // namespace stairmod
