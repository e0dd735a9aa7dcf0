#pragma once

#include <optional>

#include "robustclone/matops.h"

namespace robustclone {

/// x_{t+1} = A x_t + B u_t + w_t with w_t ~ N(0, W).
struct LinearSystem {
  Matrix A;
  Matrix B;
  SymMatrix W;

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }

  // Throws ValidationError on inconsistent dimensions, non-finite entries or
  // an indefinite W.
  void Validate() const;
};

/// Uncertainty interconnection: x⁺ = … + B1 v, z = C1 x + D12 u.
struct PerformanceChannel {
  Matrix B1;
  Matrix C1;
  Matrix D12;

  int nd() const { return static_cast<int>(B1.cols()); }
  int nz() const { return static_cast<int>(C1.rows()); }

  void Validate(const LinearSystem& sys) const;
};

/// Decision pair of the convexified problem: Q = P⁻¹, L = K P⁻¹.
struct PolicyParams {
  SymMatrix Q;
  Matrix L;
};

enum class LmiKind { kStability, kHinf };

/// Affine map (Q, L) ↦ M(Q, L) = M₀ + 𝒜(Q, L) into symmetric block matrices.
///
/// Stability:  [[Q, AQ + BL], [*, Q]].
/// H∞ (bounded real, level γ):
///   [[Q, AQ + BL, B1, 0           ],
///    [*, Q,       0,  QC1ᵀ + LᵀD12ᵀ],
///    [*, *,       I,  0           ],
///    [*, *,       *,  γ²I         ]].
///
/// A map may be built with a tied gain K, in which case L is not a decision
/// variable: every evaluation uses L = KQ. This is the closed-loop analysis
/// form of either LMI.
///
/// Decision variables are packed as [svec(Q); vec(L)] (vec(L) omitted when the
/// gain is tied). svec is scaled so the Euclidean inner product of packed
/// vectors equals the Frobenius inner product of the pairs.
class LmiMap {
 public:
  static LmiMap Stability(const LinearSystem& sys);
  static LmiMap Hinf(const LinearSystem& sys, const PerformanceChannel& ch,
                     double gamma);

  // Same constraint with L replaced by KQ.
  LmiMap WithTiedGain(const Matrix& k) const;

  LmiKind kind() const { return kind_; }
  double gamma() const { return gamma_; }
  int block_dim() const { return block_dim_; }
  int nx() const { return sys_.nx(); }
  int nu() const { return sys_.nu(); }
  bool tied() const { return tied_gain_.has_value(); }
  const std::optional<Matrix>& tied_gain() const { return tied_gain_; }
  const LinearSystem& system() const { return sys_; }
  const std::optional<PerformanceChannel>& channel() const { return channel_; }

  const SymMatrix& offset() const { return offset_; }
  SymMatrix ApplyLinear(const PolicyParams& p) const;
  SymMatrix Evaluate(const PolicyParams& p) const;
  // 𝒜*(S) as (∂/∂Q, ∂/∂L) of ⟨𝒜(Q, L), S⟩. gL is zero for a tied map.
  PolicyParams Adjoint(const SymMatrix& s) const;

  int num_vars() const;
  Vector Pack(const PolicyParams& p) const;
  PolicyParams Unpack(const Eigen::Ref<const Vector>& x) const;
  // Column j is svec(𝒜(e_j)) for the j-th packed basis vector.
  const Matrix& operator_matrix() const { return operator_matrix_; }

 private:
  LmiMap() = default;
  void Finalize();

  LmiKind kind_ = LmiKind::kStability;
  double gamma_ = 0.0;
  int block_dim_ = 0;
  LinearSystem sys_;
  std::optional<PerformanceChannel> channel_;
  std::optional<Matrix> tied_gain_;
  SymMatrix offset_;
  Matrix operator_matrix_;
};

/// Smallest eigenvalue of M(Q, L).
double margin(const LmiMap& map, const PolicyParams& p);

/// K = L Q⁻¹ via a Cholesky solve. Throws CertificateError if Q is not
/// positive definite.
Matrix extract_gain(const PolicyParams& p);

struct CertificateReport {
  Matrix K;
  SymMatrix P;                  // Q⁻¹
  double lyapunov_margin = 0;   // λ_min(P − (A+BK)ᵀP(A+BK))
  double spectral_radius = 0;   // ρ(A + BK)
  std::optional<double> hinf_norm;  // frequency-sweep ‖F(K)‖∞
  std::optional<double> gamma;
  bool stable = false;
  bool robust = false;  // hinf_norm ≤ gamma (true when no γ requested)
};

/// Recomputes every closed-loop property of the gain encoded by p using only
/// matops kernels and the frequency-sweep norm. Throws CertificateError if Q
/// is not positive definite, and if the LMI margin is positive while an
/// independent check fails (a sign of solver tolerances set too loose).
CertificateReport certify(const LinearSystem& sys,
                          const std::optional<PerformanceChannel>& ch,
                          const PolicyParams& p,
                          std::optional<double> gamma = std::nullopt);

/// Certificate for a bare gain (no (Q, L) pair available).
CertificateReport certify_gain(const LinearSystem& sys,
                               const std::optional<PerformanceChannel>& ch,
                               const Matrix& k,
                               std::optional<double> gamma = std::nullopt);

}  // namespace robustclone
