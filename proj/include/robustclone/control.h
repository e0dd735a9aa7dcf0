#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "robustclone/lmi.h"
#include "robustclone/rng.h"
#include "robustclone/splitting.h"

namespace robustclone {

struct Trajectory {
  std::vector<Vector> states;   // T + 1 entries unless diverged
  std::vector<Vector> actions;  // T entries unless diverged
  bool diverged = false;
};

/// w_t ~ N(0, W), expert action noise e_t ~ N(0, Σ), x₀ ~ U(−1, 1)ⁿ.
struct NoiseModel {
  SymMatrix W;
  SymMatrix Sigma;
  std::uint64_t seed = 0;
};

inline constexpr double kDivergenceNorm = 1e9;
inline constexpr double kCostCap = 1e12;

/// x_{t+1} = A x_t + B (K x_t + e_t) + w_t. Each step draws e_t (only when
/// with_expert_noise) and then w_t from rng. Stops early and sets `diverged`
/// once ‖x_t‖ exceeds kDivergenceNorm.
Trajectory simulate(const LinearSystem& sys, const Matrix& k,
                    const NoiseModel& noise, const Vector& x0, int steps,
                    bool with_expert_noise, Rng& rng);

/// As above with x₀ drawn from rng first.
Trajectory simulate(const LinearSystem& sys, const Matrix& k,
                    const NoiseModel& noise, int steps, bool with_expert_noise,
                    Rng& rng);

Vector SampleInitialState(int nx, Rng& rng);

/// Random (Q₀, L₀) with entries in [−1, 1] projected onto the stability LMI.
/// Projection of an infeasible draw lands near the boundary, so the gain is
/// stabilizing with little margin. Throws InfeasibleError when 10 draws fail.
Matrix expert_aggressive(const LinearSystem& sys, Rng& rng,
                         const SolverConfig& cfg = {});

Matrix expert_lqr(const LinearSystem& sys, const SymMatrix& qc,
                  const SymMatrix& rc);

/// Largest singular value of (C1 + D12 K)(e^{jω}I − (A + BK))⁻¹B1 over a
/// uniform grid on [0, π], refined by golden-section search around the grid
/// maximum. A lower bound on ‖F(K)‖∞.
double hinf_norm_sweep(const LinearSystem& sys, const PerformanceChannel& ch,
                       const Matrix& k, int grid_size = 4096);

/// ‖F(K)‖∞ by bisection on γ over feasibility of the H∞ LMI with L tied to
/// KQ. Returns the upper end of the final bracket, which is within `tol`
/// (relative) of the infimum. Throws ValidationError if K is not stabilizing.
double hinf_norm_lmi(const LinearSystem& sys, const PerformanceChannel& ch,
                     const Matrix& k, double tol = 1e-3,
                     const SolverConfig& cfg = {});

struct HinfSynthesis {
  Matrix K;
  double gamma_star = 0.0;
  PolicyParams params;
};

/// Smallest γ (to relative `tol`) for which the H∞ LMI is feasible, with the
/// gain extracted at that level. Throws InfeasibleError when even the
/// stability LMI is infeasible and CertificateError if the frequency sweep of
/// the result exceeds γ*(1 + 1e-2).
HinfSynthesis synth_hinf(const LinearSystem& sys, const PerformanceChannel& ch,
                         double tol = 1e-3, const SolverConfig& cfg = {});

struct CostResult {
  double value = 0.0;
  int diverged = 0;  // trials in which the fitted closed loop blew up
};

/// Mean over trials of (1/T) Σ_{t=1..T} ‖x*_t − x_t‖² where both closed loops
/// start at the same x₀ and see the same w_t. No expert action noise.
CostResult cost_traj(const LinearSystem& sys, const Matrix& k,
                     const Matrix& kstar, const NoiseModel& noise,
                     int trials = 100, int steps = 100);

/// J(K) − J(K*) with J the trial mean of (1/T) Σ_{t<T} xᵀQc x + uᵀRc u under
/// paired process noise (no expert action noise).
CostResult cost_lqr(const LinearSystem& sys, const Matrix& k,
                    const Matrix& kstar, const SymMatrix& qc,
                    const SymMatrix& rc, const NoiseModel& noise,
                    int trials = 100, int steps = 1000);

/// ‖F(K)‖∞ − ‖F(K*)‖∞ via hinf_norm_lmi; +∞ when K is not stabilizing.
double cost_hinf(const LinearSystem& sys, const PerformanceChannel& ch,
                 const Matrix& k, const Matrix& kstar, double tol = 1e-3,
                 const SolverConfig& cfg = {});

}  // namespace robustclone
