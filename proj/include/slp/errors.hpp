#pragma once

#include <stdexcept>
#include <string>

namespace slp {

/// Root of every error the toolkit throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or profile (bad indices, missing keys, bad flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Data does not match the expected in-memory schema (wrong landmark counts, ...).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// On-disk file is malformed (magic, version, dimensions, truncation).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Caller supplied an invalid argument (empty text, empty token list, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf surfaced during numeric evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The CTC target cannot be aligned to the given number of frames.
class InfeasibleAlignmentError : public Error {
 public:
  using Error::Error;
};

/// A remote gloss provider failed after all retries.
class ProviderError : public Error {
 public:
  using Error::Error;
};

}  // namespace slp
