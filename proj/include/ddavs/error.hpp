#pragma once

#include <stdexcept>
#include <string>

namespace ddavs {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible array shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range hyper-parameter or argument.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value where a finite one is required.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Too few samples or embeddings for the requested statistic.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  enum class Kind { BadMagic, VersionMismatch, Truncated, Malformed };

  DecodeError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace ddavs
