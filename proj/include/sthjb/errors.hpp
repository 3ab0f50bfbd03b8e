#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sthjb {

/// Invalid run configuration or out-of-range discretisation parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mesh topology that violates the 1-irregular tiling assumptions.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coefficient data that is not uniformly elliptic.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The sampled Cordes slack is not positive.
class CordesViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Nonlinear or linear solve failure; carries the residual history.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int slab, std::vector<double> residuals)
      : std::runtime_error(what), slab_(slab), residuals_(std::move(residuals)) {}

  int slab() const { return slab_; }
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  int slab_;
  std::vector<double> residuals_;
};

}  // namespace sthjb
