#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robustclone/lmi.h"
#include "robustclone/splitting.h"

namespace robustclone {

/// Demonstrations as columns: X is nx × N, U is nu × N.
struct Dataset {
  Matrix X;
  Matrix U;

  int N() const { return static_cast<int>(X.cols()); }
  void Validate() const;
};

/// Below this many samples gradients are always taken on the full batch.
inline constexpr int kMiniBatchThreshold = 50;

struct FitConfig {
  // Ridge weight for r(K) = λ‖K‖_F². Unset means 1e-4·‖U‖_F²/N.
  std::optional<double> lambda;
  double step_size = 1.0;  // initial PGD step; adapted by backtracking
  int outer_iters = 300;
  double admm_rho = 1.0;
  // Weight of (μ/2)‖(Q, L) − (Q, L)_prev‖² added to the (Q, L)-step. It makes
  // the step strongly convex without moving ADMM fixed points.
  double admm_prox = 1e-3;
  // Inner splitting iterations after which an iterate with margin ≥ eps/2 is
  // accepted without full convergence: (Q, L)-steps for ADMM, projections
  // for PGD.
  int admm_inner_iters = 200;
  int pgd_inner_iters = 200;
  int batch = 0;  // 0 = full batch
  std::uint64_t seed = 0;

  void Validate() const;
  double ResolveLambda(const Dataset& data) const;
};

struct FitReport {
  std::string method;
  Matrix K;
  std::optional<PolicyParams> params;
  std::vector<double> objective_history;
  std::vector<double> feasibility_margins;
  std::vector<double> admm_primal_residuals;
  double wall_time_ms = 0.0;
  std::optional<CertificateReport> certificate;
  bool valid = true;
  std::string failure;
};

/// (1/N)‖KX − U‖_F² + λ‖K‖_F².
double bc_objective(const Matrix& k, const Dataset& data, double lambda);

/// (2/N)(KX − U)Xᵀ + 2λK.
Matrix bc_gradient_K(const Matrix& k, const Dataset& data, double lambda);

/// Gradient of (Q, L) ↦ bc_objective(LQ⁻¹) with the Q part symmetrized.
/// Throws CertificateError if Q is not positive definite.
PolicyParams grad_QL(const PolicyParams& p, const Dataset& data, double lambda);

/// Closed-form ridge solution UXᵀ(XXᵀ + NλI)⁻¹.
Matrix fit_unconstrained(const Dataset& data, double lambda);

/// Projected gradient descent on (Q, L) with Armijo backtracking.
FitReport fit_pgd(const Dataset& data, const LmiMap& map, const FitConfig& cfg,
                  const SolverConfig& scfg = {});

/// Three-step ADMM on the split L = KQ: closed-form K-step, constrained
/// (Q, L)-step, dual ascent on Y.
FitReport fit_admm(const Dataset& data, const LmiMap& map, const FitConfig& cfg,
                   const SolverConfig& scfg = {});

/// Minimizer over K of the augmented Lagrangian
///   bc_objective(K) + tr(Yᵀ(KQ − L)) + (ρ/2)‖KQ − L‖_F².
Matrix admm_k_step(const Dataset& data, double lambda, const PolicyParams& p,
                   const Matrix& y, double rho);

}  // namespace robustclone
