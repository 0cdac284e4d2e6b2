#pragma once

#include <stdexcept>
#include <string>

namespace insert {

// Error categories map to CLI exit codes: ConfigError -> 2, DataError -> 3,
// NumericError -> 4, ArtifactMismatchError -> 5.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape mismatch in tensor ops; message names both shapes.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// API misuse (empty context, non-scalar loss, out-of-range target, ...).
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

// NaN/Inf detected in a value or gradient.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint/dataset hash mismatch.
struct ArtifactMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace insert
