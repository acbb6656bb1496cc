#pragma once

#include <stdexcept>
#include <string>

#include "mczsl/real.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity was produced or supplied.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration or CLI usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class DataErrorKind {
  io,
  bad_magic,
  version_mismatch,
  truncated,
  invariant_violation,
  unknown_dataset,
  incompatible,
};

inline const char* to_string(DataErrorKind kind) {
  switch (kind) {
    case DataErrorKind::io: return "io error";
    case DataErrorKind::bad_magic: return "bad magic";
    case DataErrorKind::version_mismatch: return "version mismatch";
    case DataErrorKind::truncated: return "truncated file";
    case DataErrorKind::invariant_violation: return "invariant violation";
    case DataErrorKind::unknown_dataset: return "unknown dataset";
    case DataErrorKind::incompatible: return "incompatible";
  }
  return "data error";
}

/// Problems with dataset containers, checkpoints and metrics files.
class DataError : public Error {
 public:
  DataError(DataErrorKind kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  DataErrorKind kind() const noexcept { return kind_; }

 private:
  DataErrorKind kind_;
};

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
