#pragma once

#include <stdexcept>
#include <string>

namespace crase {

// Bad argument to a library function (bad index, out-of-range parameter, ...).
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Region-1 gain at or above the cavity loss rate.
class AboveThresholdError : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

// Explicit integrator blew up (time step too large for the detuning band).
class StepSizeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Configuration file problem. Carries the key and line when known.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& what, std::string key = {}, int line = 0)
      : std::runtime_error(what), key_(std::move(key)), line_(line) {}

  const std::string& key() const { return key_; }
  int line() const { return line_; }

private:
  std::string key_;
  int line_;
};

}  // namespace crase
