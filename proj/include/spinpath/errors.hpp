#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinpath {

/// Bad argument: out-of-range input, wrong dimension, malformed text.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input is well formed but outside the domain where the quantity is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A closed-form expression hit a division by zero (e.g. nu''(q) = 0).
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical data contradicts a structural assumption (no root, no aligned eigenvector, ...).
class InconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Disorder tensors would not fit in the configured memory budget.
class CapacityError : public std::runtime_error {
 public:
  CapacityError(std::uint64_t bytes, std::uint64_t budget);
  std::uint64_t bytes() const noexcept { return bytes_; }
  std::uint64_t budget() const noexcept { return budget_; }

 private:
  std::uint64_t bytes_;
  std::uint64_t budget_;
};

/// No direction met the Rayleigh condition, even after the dense fallback.
class SpectralFailure : public std::runtime_error {
 public:
  SpectralFailure(double achieved, double target);
  double achieved_rayleigh() const noexcept { return achieved_; }
  double target_rayleigh() const noexcept { return target_; }

 private:
  double achieved_;
  double target_;
};

/// Configuration validation failure; carries every problem found, not only the first.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace spinpath
