#pragma once

#include <stdexcept>
#include <string>

namespace vihmc {

/// Invalid shapes, malformed configs, mismatched artifacts.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite losses, diverged solvers, failed step-size adaptation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A run finished but its output fails a quality gate (e.g. every chain bad).
class QualityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vihmc
