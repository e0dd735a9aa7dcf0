#pragma once

#include <stdexcept>
#include <string>

namespace robustclone {

// Bad dimensions, non-finite entries, violated preconditions.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative routine hit its iteration cap without meeting its tolerances.
class SolverFailure : public std::runtime_error {
 public:
  explicit SolverFailure(const std::string& what, double primal_residual = 0.0,
                         double dual_residual = 0.0, int iterations = 0)
      : std::runtime_error(what),
        primal_residual_(primal_residual),
        dual_residual_(dual_residual),
        iterations_(iterations) {}

  double primal_residual() const { return primal_residual_; }
  double dual_residual() const { return dual_residual_; }
  int iterations() const { return iterations_; }

 private:
  double primal_residual_;
  double dual_residual_;
  int iterations_;
};

// The LMI constraint set appears to be empty.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A (Q, L) pair cannot be turned into a gain, or an independent check of a
// certificate disagrees with the solver that produced it.
class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace robustclone
