#pragma once

#include <stdexcept>
#include <string>

namespace linmar {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatch in an op (wrong rank, incompatible dims).
struct DimensionError : Error {
  using Error::Error;
};

// NaN/Inf produced or consumed where finite values are required.
struct NumericError : Error {
  using Error::Error;
};

// An attention normalizer fell below epsilon while strict mode is on.
struct DegenerateNormalizerError : NumericError {
  using NumericError::NumericError;
};

// API misuse: invalid configuration of an op or module (bad mode, bad
// role, quadratic form on an oversized sequence, mixed tapes, ...).
struct ContractError : Error {
  using Error::Error;
};

// Config file / CLI override problems. Carries no state beyond the message;
// the CLI maps this to exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

// Missing or unreadable artifact (checkpoint, dataset file). Exit code 3.
struct ArtifactError : Error {
  using Error::Error;
};

// Training diverged (non-finite loss) or could not proceed.
struct TrainingError : Error {
  using Error::Error;
};

}  // namespace linmar
