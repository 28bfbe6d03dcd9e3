#pragma once

#include <stdexcept>
#include <string>

namespace liftcut {

/// Malformed input: syntax errors, weight-sum violations, duplicate ids,
/// violated preconditions on user-supplied graphs.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver stopped before reaching its tolerance.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double residual, long iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  long iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

/// The chain is not irreducible where irreducibility is required.
class ReducibleChain : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// The walk on the universal cover is recurrent (or the base graph has no
/// cycle), so ray quantities are undefined.
class RecurrentCover : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Zero cutoff entropy: no mixing-time prediction exists.
class DegenerateEntropy : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace liftcut
