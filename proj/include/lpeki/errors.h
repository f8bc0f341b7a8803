#ifndef LPEKI_ERRORS_H_
#define LPEKI_ERRORS_H_

#include <stdexcept>
#include <string>

namespace lpeki {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violations: shape mismatches, empty ensembles, bad arguments.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Factorization or iterative-solver failures.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A power map or exponential left the representable floating range.
class OverflowError : public Error {
 public:
  OverflowError(const std::string& what, long component = -1)
      : Error(what), component_(component) {}

  /// Offending component index, or -1 for scalar evaluations.
  long component() const noexcept { return component_; }

 private:
  long component_;
};

/// Multi-batch runs whose active set became empty.
class DegenerateProblem : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration; `key()` is the JSON key path at fault.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace lpeki

#endif  // LPEKI_ERRORS_H_
