#pragma once

#include <stdexcept>
#include <string>

namespace pumpkit {

// Error taxonomy mirrored by the CLI exit codes: config errors exit 2,
// numeric/model failures exit 3, missing artifacts exit 4.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MissingArtifactError : std::runtime_error {
  explicit MissingArtifactError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Band gap closes along the pump cycle: winding is undefined.
struct TopologyUndefinedError : NumericError {
  using NumericError::NumericError;
};

// Extracted band structure does not match the two-band model.
struct ModelMismatchError : NumericError {
  using NumericError::NumericError;
};

struct DegenerateSpectrumError : NumericError {
  using NumericError::NumericError;
};

struct OutOfRegimeError : NumericError {
  using NumericError::NumericError;
};

struct CalibrationRangeError : NumericError {
  using NumericError::NumericError;
};

// An operation was called out of protocol order (e.g. measuring singlet
// fraction while pairs are not on adjacent sites).
struct ProtocolOrderError : NumericError {
  using NumericError::NumericError;
};

// The deterministic pair engine cannot represent the requested gate.
struct UnsupportedGateError : NumericError {
  using NumericError::NumericError;
};

struct FitFailureError : NumericError {
  using NumericError::NumericError;
};

struct InsufficientDataError : NumericError {
  using NumericError::NumericError;
};

}  // namespace pumpkit
