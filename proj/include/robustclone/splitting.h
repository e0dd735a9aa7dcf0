#pragma once

#include <optional>

#include "robustclone/lmi.h"

namespace robustclone {

struct SolverConfig {
  double eps = 1e-6;         // constraint is M(Q, L) ⪰ eps·I
  double tol_primal = 1e-8;  // ‖M(x) − S‖_F at termination
  double tol_dual = 1e-8;
  int max_iter = 20000;
  double over_relaxation = 1.6;
  double penalty = 1.0;  // initial splitting penalty σ
  bool adaptive_penalty = true;
  // Anderson acceleration memory; 0 disables it.
  int anderson_memory = 10;
  int stall_window = 500;
  double stall_rel_change = 1e-10;

  // Throws ValidationError unless all fields are positive, tol_* < eps and
  // over_relaxation ∈ [1, 2).
  void Validate() const;
};

/// f(Q, L) = ⟨C_Q, Q⟩ + ⟨C_L, L⟩ + (r/2)‖K₀Q − L + c₀‖_F²
///           + (w/2)‖(Q, L) − (Q̂, L̂)‖_F²
struct QuadraticObjective {
  std::optional<SymMatrix> linear_q;
  std::optional<Matrix> linear_l;
  Matrix gain;    // K₀ (nu × nx); may be empty when weight == 0
  Matrix offset;  // c₀ (nu × nx); empty means zero
  double weight = 0.0;
  std::optional<PolicyParams> prox_center;
  double prox_weight = 0.0;

  static QuadraticObjective Proximal(const SymMatrix& qhat, const Matrix& lhat,
                                     double weight = 2.0);
  double Evaluate(const PolicyParams& p) const;
};

enum class SolveStatus { kConverged, kEarlyExit, kInexact, kMaxIter, kInfeasible };

struct SolveStats {
  SolveStatus status = SolveStatus::kConverged;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double penalty = 0.0;
};

/// Consensus-splitting (ADMM) solver for
///     minimize f(x)  subject to  M(x) = S,  S ⪰ eps·I
/// over an LmiMap. Each iteration solves a linear system whose matrix depends
/// only on the map, the objective's quadratic part and the penalty, clips the
/// eigenvalues of M(x) + U, and updates the scaled dual U.
///
/// The instance keeps its last (S, U) pair so consecutive solves on nearby
/// data warm-start each other. One instance serves one thread.
class SplittingSolver {
 public:
  SplittingSolver(LmiMap map, SolverConfig cfg = {});

  const LmiMap& map() const { return map_; }
  const SolverConfig& config() const { return cfg_; }
  const SolveStats& last_stats() const { return stats_; }

  /// Frobenius-nearest (Q, L) satisfying the LMI with margin eps. Points that
  /// already satisfy it are returned unchanged.
  PolicyParams Project(const SymMatrix& qhat, const Matrix& lhat);

  /// Project with the acceptance rule of MinimizeInexact, warm-started at
  /// `warm`.
  PolicyParams ProjectInexact(const SymMatrix& qhat, const Matrix& lhat,
                              const PolicyParams& warm, int budget);

  PolicyParams Minimize(const QuadraticObjective& obj,
                        const std::optional<PolicyParams>& warm = std::nullopt);

  /// As Minimize, but once `budget` iterations have run the current iterate
  /// is accepted as soon as it has margin ≥ eps/2 (status kInexact). Meant
  /// for outer loops that tolerate inexact steps.
  PolicyParams MinimizeInexact(const QuadraticObjective& obj,
                               const PolicyParams& warm, int budget);

  /// Phase I: any (Q, L) with margin ≥ eps/2, started from (I, 0). Throws
  /// InfeasibleError when the distance to the cone stalls at a positive value.
  PolicyParams FindFeasible();

  void ResetWarmStart();

 private:
  struct Quadratic {
    Matrix hessian;  // P (may be singular)
    Vector linear;   // q
  };
  Quadratic Assemble(const QuadraticObjective& obj) const;
  Vector Solve(const Quadratic& quad, Vector x0, bool feasibility_only,
               int accept_after = 0);
  PolicyParams MinimizeImpl(const QuadraticObjective& obj,
                            const std::optional<PolicyParams>& warm,
                            int accept_after);
  void Factorize(const Matrix& hessian, double sigma);

  LmiMap map_;
  SolverConfig cfg_;
  Matrix a_;      // operator matrix in svec coordinates
  Vector b_;      // svec(M₀ − shift·I)
  Matrix ata_;
  Eigen::LLT<Matrix> factor_;
  double factor_sigma_ = -1.0;
  Matrix factor_hessian_copy_;

  std::optional<Vector> warm_s_;
  std::optional<Vector> warm_u_;
  double warm_sigma_ = 0.0;
  SolveStats stats_;
};

PolicyParams project(const LmiMap& map, const SymMatrix& qhat,
                     const Matrix& lhat, const SolverConfig& cfg = {});

PolicyParams minimize_quadratic(
    const LmiMap& map, const QuadraticObjective& obj,
    const std::optional<PolicyParams>& warm = std::nullopt,
    const SolverConfig& cfg = {});

PolicyParams find_feasible(const LmiMap& map, const SolverConfig& cfg = {});

}  // namespace robustclone
