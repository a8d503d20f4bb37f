#pragma once

#include <stdexcept>
#include <string>

namespace colgrade {

// Base for all library errors. Subclasses map onto the failure kinds the
// public operations document; the CLI maps them to exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or truncated file content (bad magic, short payload, ...).
struct FormatError : Error {
  using Error::Error;
};

// Well-formed container but unusable values (non-finite voxels, labels out
// of range, empty training sets, ...).
struct DataError : Error {
  using Error::Error;
};

// Dimension or layout mismatch between arguments.
struct ShapeError : Error {
  using Error::Error;
};

// Cube or index does not fit inside a volume.
struct BoundsError : Error {
  using Error::Error;
};

// Resampling target incompatible with the input grid.
struct ResampleError : Error {
  using Error::Error;
};

// Invalid phantom specification.
struct SpecError : Error {
  using Error::Error;
};

// Invalid run configuration (hyperparameters, empty datasets, CLI/config-file
// values out of range).
struct ConfigError : Error {
  using Error::Error;
};

// Mathematical domain violation (e.g. non-probability input to a loss).
struct DomainError : Error {
  using Error::Error;
};

}  // namespace colgrade
