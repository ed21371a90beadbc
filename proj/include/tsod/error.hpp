#pragma once

#include <stdexcept>
#include <string>

namespace tsod {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Riccati iteration did not converge or diverged; the parameter is not
/// (numerically) stabilizable.
class NonStabilizable : public Error {
 public:
  using Error::Error;
};

/// State norm left the configured ceiling during a rollout.
class UnstableRollout : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class SingularPrecision : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration. `key()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsod
