#pragma once

#include <stdexcept>
#include <string>

namespace wfc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Effective thrust C_T cos(yaw) exceeds one.
class InvalidThrustError : public Error {
 public:
  using Error::Error;
};

/// An observation-point chain lost all of its points.
class StateCorruptionError : public Error {
 public:
  using Error::Error;
};

/// The turbine interaction graph contains a cycle.
class CycleError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is missing or out of range. `field` is the dotted
/// path of the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Input data cannot be processed (gaps, length mismatches, short traces).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace wfc
