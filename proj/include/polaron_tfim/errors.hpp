#pragma once

#include <stdexcept>
#include <string>

namespace polaron_tfim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

/// Lattice extent incompatible with the three-sublattice order.
class CommensurabilityError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class GeometryMismatchError : public Error {
 public:
  using Error::Error;
};

class DegenerateWallError : public Error {
 public:
  using Error::Error;
};

/// A perturbative denominator vanished (virtual state degenerate with the pair).
class ResonanceError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Transverse field is zero where a Trotter coupling is required.
class ClassicalLimitError : public Error {
 public:
  using Error::Error;
};

class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

class UndefinedRateError : public Error {
 public:
  using Error::Error;
};

class NoOverlapError : public Error {
 public:
  using Error::Error;
};

class FitImpossibleError : public Error {
 public:
  using Error::Error;
};

/// Configuration problem, tagged with the offending key and source line (0 if absent).
class ConfigError : public Error {
 public:
  ConfigError(std::string key, int line, const std::string& message)
      : Error(format(key, line, message)), key_(std::move(key)), line_(line) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& key, int line, const std::string& message) {
    std::string out;
    if (!key.empty()) out += key + ": ";
    out += message;
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    return out;
  }

  std::string key_;
  int line_;
};

}  // namespace polaron_tfim
