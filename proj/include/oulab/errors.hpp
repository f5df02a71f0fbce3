#pragma once

#include <stdexcept>
#include <string>

namespace oulab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A function evaluated to a non-finite value at a quadrature or grid node.
class NumericalDomainError : public Error {
 public:
  NumericalDomainError(const std::string& what, double node)
      : Error(what + " (node " + std::to_string(node) + ")"), node_(node) {}
  double node() const noexcept { return node_; }

 private:
  double node_;
};

/// F, f and f' failed the finite-difference consistency probe.
class ModelInconsistencyError : public Error {
 public:
  ModelInconsistencyError(const std::string& what, double point)
      : Error(what + " (probe point " + std::to_string(point) + ")"), point_(point) {}
  double point() const noexcept { return point_; }

 private:
  double point_;
};

/// The adaptive integrator could not make progress.
class NumericalStiffnessError : public Error {
 public:
  NumericalStiffnessError(const std::string& what, double slope)
      : Error(what + " (trial slope " + std::to_string(slope) + ")"), slope_(slope) {}
  double slope() const noexcept { return slope_; }

 private:
  double slope_;
};

/// Explicit time stepping produced NaN or overflow.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class DegenerateFieldError : public Error {
 public:
  using Error::Error;
};

/// Config file problems; carries the offending line and key when known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, std::string key = {})
      : Error(format(what, line, key)), line_(line), key_(std::move(key)) {}
  int line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  static std::string format(const std::string& what, int line, const std::string& key) {
    std::string s = "config";
    if (line > 0) s += ":" + std::to_string(line);
    if (!key.empty()) s += " [" + key + "]";
    return s + ": " + what;
  }
  int line_;
  std::string key_;
};

}  // namespace oulab
