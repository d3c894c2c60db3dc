#pragma once

#include <stdexcept>
#include <string>

namespace poleloc {

enum class ErrorCode {
  insufficient_support,
  degenerate_geometry,
  empty_map,
  zero_feature,
  trajectory_mismatch,
  input_mismatch,
  schema_mismatch,
  io_error,
  packing_failed,
  config_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::insufficient_support: return "InsufficientSupport";
    case ErrorCode::degenerate_geometry: return "DegenerateGeometry";
    case ErrorCode::empty_map: return "EmptyMap";
    case ErrorCode::zero_feature: return "ZeroFeature";
    case ErrorCode::trajectory_mismatch: return "TrajectoryMismatch";
    case ErrorCode::input_mismatch: return "InputMismatch";
    case ErrorCode::schema_mismatch: return "SchemaMismatch";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::packing_failed: return "PackingFailed";
    case ErrorCode::config_error: return "ConfigError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace poleloc
