#pragma once

#include <stdexcept>
#include <string>

namespace wrapids {

// Base of every error the library throws. The CLI maps the subclasses onto
// exit codes: ConfigError -> 2, DataError -> 3, anything else -> 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration, bad arguments, or a referenced file that does not exist.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input data: parse failures, schema mismatches, invalid labels.
class DataError : public Error {
 public:
  using Error::Error;
};

// Data does not match the schema a model or transform was fitted on.
class SchemaMismatch : public DataError {
 public:
  using DataError::DataError;
};

// Persisted artifact with an unknown format or version.
class ArtifactError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace wrapids
