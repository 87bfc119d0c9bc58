#pragma once

#include <stdexcept>
#include <string>

namespace amp {

enum class ErrorKind {
  kInvalidInput,
  kParse,
  kDimensionMismatch,
  kEmpty,
  kSimulationDiverged,
  kSpecMismatch,
  kIo,
  kInternal,
};

// All library failures derive from this. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid input";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kEmpty: return "empty input";
    case ErrorKind::kSimulationDiverged: return "simulation diverged";
    case ErrorKind::kSpecMismatch: return "spec mismatch";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kInternal: return "internal error";
  }
  return "unknown error";
}

}  // namespace amp
