#pragma once

#include <stdexcept>

namespace bliss {

// Caller passed an argument that violates an operation's contract
// (dimension mismatch, wrong solution kind, ...).
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// The operation exists but not for this family or problem size
// (e.g. exhaustive tour search above the size cap).
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid experiment or trainer configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Errors raised while loading persisted files. Subclasses distinguish
// syntactic damage, format-version mismatch and failed consistency checks.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedFileError : LoadError {
  using LoadError::LoadError;
};
struct VersionError : LoadError {
  using LoadError::LoadError;
};
struct AggregateMismatchError : LoadError {
  using LoadError::LoadError;
};

}  // namespace bliss
