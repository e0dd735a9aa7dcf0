#include "robustclone/lmi.h"

#include <cmath>
#include <string>

#include "robustclone/control.h"
#include "robustclone/errors.h"

namespace robustclone {

void LinearSystem::Validate() const {
  RequireSquare(A, "A");
  RequireFinite(A, "A");
  RequireFinite(B, "B");
  RequireFinite(W.mat(), "W");
  if (A.rows() == 0) throw ValidationError("A must be non-empty");
  if (B.rows() != A.rows()) {
    throw ValidationError("B must have as many rows as A");
  }
  if (B.cols() == 0) throw ValidationError("B must have at least one column");
  if (W.dim() != nx()) throw ValidationError("W must be nx x nx");
  if (min_eigenvalue(W) < -1e-12 * std::max(1.0, W.norm())) {
    throw ValidationError("W must be positive semidefinite");
  }
}

void PerformanceChannel::Validate(const LinearSystem& sys) const {
  RequireFinite(B1, "B1");
  RequireFinite(C1, "C1");
  RequireFinite(D12, "D12");
  if (B1.rows() != sys.nx()) throw ValidationError("B1 must have nx rows");
  if (C1.cols() != sys.nx()) throw ValidationError("C1 must have nx columns");
  if (D12.rows() != C1.rows()) {
    throw ValidationError("D12 must have as many rows as C1");
  }
  if (D12.cols() != sys.nu()) throw ValidationError("D12 must have nu columns");
  if (B1.cols() == 0 || C1.rows() == 0) {
    throw ValidationError("channel dimensions nd and nz must be positive");
  }
}

LmiMap LmiMap::Stability(const LinearSystem& sys) {
  sys.Validate();
  LmiMap map;
  map.kind_ = LmiKind::kStability;
  map.sys_ = sys;
  map.block_dim_ = 2 * sys.nx();
  map.offset_ = SymMatrix::Zero(map.block_dim_);
  map.Finalize();
  return map;
}

LmiMap LmiMap::Hinf(const LinearSystem& sys, const PerformanceChannel& ch,
                    double gamma) {
  sys.Validate();
  ch.Validate(sys);
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ValidationError("hinf_lmi: gamma must be positive and finite");
  }
  LmiMap map;
  map.kind_ = LmiKind::kHinf;
  map.gamma_ = gamma;
  map.sys_ = sys;
  map.channel_ = ch;
  const int n = sys.nx();
  const int nd = ch.nd();
  const int nz = ch.nz();
  map.block_dim_ = 2 * n + nd + nz;

  Matrix m0 = Matrix::Zero(map.block_dim_, map.block_dim_);
  m0.block(0, 2 * n, n, nd) = ch.B1;
  m0.block(2 * n, 2 * n, nd, nd).setIdentity();
  m0.block(2 * n + nd, 2 * n + nd, nz, nz) =
      gamma * gamma * Matrix::Identity(nz, nz);
  map.offset_ = SymMatrix(m0);
  map.Finalize();
  return map;
}

LmiMap LmiMap::WithTiedGain(const Matrix& k) const {
  if (k.rows() != nu() || k.cols() != nx()) {
    throw ValidationError("WithTiedGain: K must be nu x nx");
  }
  RequireFinite(k, "K");
  LmiMap map = *this;
  map.tied_gain_ = k;
  map.Finalize();
  return map;
}

SymMatrix LmiMap::ApplyLinear(const PolicyParams& p) const {
  const int n = nx();
  if (p.Q.dim() != n) throw ValidationError("LmiMap: Q must be nx x nx");
  const Matrix& q = p.Q.mat();
  Matrix l_tied;
  if (tied_gain_) l_tied = *tied_gain_ * q;
  const Matrix& l = tied_gain_ ? l_tied : p.L;
  if (l.rows() != nu() || l.cols() != n) {
    throw ValidationError("LmiMap: L must be nu x nx");
  }

  // Only the upper triangle is filled; SymMatrix mirrors it.
  Matrix m = Matrix::Zero(block_dim_, block_dim_);
  m.block(0, 0, n, n) = q;
  m.block(n, n, n, n) = q;
  m.block(0, n, n, n) = sys_.A * q + sys_.B * l;
  if (kind_ == LmiKind::kHinf) {
    const PerformanceChannel& ch = *channel_;
    m.block(n, 2 * n + ch.nd(), n, ch.nz()) =
        q * ch.C1.transpose() + l.transpose() * ch.D12.transpose();
  }
  return SymMatrix(m);
}

SymMatrix LmiMap::Evaluate(const PolicyParams& p) const {
  return offset_ + ApplyLinear(p);
}

PolicyParams LmiMap::Adjoint(const SymMatrix& s) const {
  if (s.dim() != block_dim_) {
    throw ValidationError("LmiMap::Adjoint: S has the wrong dimension");
  }
  const int n = nx();
  const Matrix& sm = s.mat();
  const Matrix s12 = sm.block(0, n, n, n);
  // ⟨M, S⟩ picks up each off-diagonal block twice.
  Matrix gq = sm.block(0, 0, n, n) + sm.block(n, n, n, n) +
              sys_.A.transpose() * s12 + s12.transpose() * sys_.A;
  Matrix gl = 2.0 * sys_.B.transpose() * s12;
  if (kind_ == LmiKind::kHinf) {
    const PerformanceChannel& ch = *channel_;
    const Matrix s24 = sm.block(n, 2 * n + ch.nd(), n, ch.nz());
    gq += s24 * ch.C1 + ch.C1.transpose() * s24.transpose();
    gl += 2.0 * ch.D12.transpose() * s24.transpose();
  }
  if (tied_gain_) {
    // L = KQ: ⟨gL, KQ⟩ = ⟨Kᵀ gL, Q⟩.
    const Matrix kg = tied_gain_->transpose() * gl;
    gq += 0.5 * (kg + kg.transpose());
    gl.setZero();
  }
  return {SymMatrix::FromAverage(gq), gl};
}

int LmiMap::num_vars() const {
  return svec_size(nx()) + (tied_gain_ ? 0 : nu() * nx());
}

Vector LmiMap::Pack(const PolicyParams& p) const {
  Vector x(num_vars());
  const int nq = svec_size(nx());
  x.head(nq) = svec(p.Q);
  if (!tied_gain_) {
    if (p.L.rows() != nu() || p.L.cols() != nx()) {
      throw ValidationError("LmiMap::Pack: L must be nu x nx");
    }
    x.tail(nu() * nx()) = Eigen::Map<const Vector>(p.L.data(), p.L.size());
  }
  return x;
}

PolicyParams LmiMap::Unpack(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != num_vars()) {
    throw ValidationError("LmiMap::Unpack: wrong vector length");
  }
  const int nq = svec_size(nx());
  PolicyParams p;
  p.Q = smat(x.head(nq), nx());
  if (tied_gain_) {
    p.L = *tied_gain_ * p.Q.mat();
  } else {
    p.L = Eigen::Map<const Matrix>(x.data() + nq, nu(), nx());
  }
  return p;
}

void LmiMap::Finalize() {
  const int nv = num_vars();
  operator_matrix_.resize(svec_size(block_dim_), nv);
  Vector e = Vector::Zero(nv);
  for (int j = 0; j < nv; ++j) {
    e(j) = 1.0;
    operator_matrix_.col(j) = svec(ApplyLinear(Unpack(e)));
    e(j) = 0.0;
  }
}

double margin(const LmiMap& map, const PolicyParams& p) {
  return min_eigenvalue(map.Evaluate(p));
}

Matrix extract_gain(const PolicyParams& p) {
  RequireFinite(p.Q.mat(), "Q");
  RequireFinite(p.L, "L");
  if (p.L.cols() != p.Q.dim()) {
    throw ValidationError("extract_gain: L must have as many columns as Q");
  }
  Eigen::LLT<Matrix> llt(p.Q.mat());
  if (llt.info() != Eigen::Success || min_eigenvalue(p.Q) <= 0.0) {
    throw CertificateError(
        "extract_gain: Q is not positive definite; re-project (Q, L) onto the "
        "LMI set before extracting a gain");
  }
  // K Q = L  ⇔  Q Kᵀ = Lᵀ.
  return llt.solve(p.L.transpose()).transpose();
}

namespace {

CertificateReport CertifyImpl(const LinearSystem& sys,
                              const std::optional<PerformanceChannel>& ch,
                              const Matrix& k, const SymMatrix& p,
                              std::optional<double> gamma) {
  CertificateReport report;
  report.K = k;
  report.P = p;
  const Matrix acl = sys.A + sys.B * k;
  report.spectral_radius = spectral_radius(acl);
  report.lyapunov_margin = min_eigenvalue(
      SymMatrix::FromAverage(p.mat() - acl.transpose() * p.mat() * acl));
  report.stable = report.spectral_radius < 1.0;
  report.gamma = gamma;
  report.robust = true;
  if (ch) {
    if (report.stable) {
      report.hinf_norm = hinf_norm_sweep(sys, *ch, k);
    } else {
      report.hinf_norm = std::numeric_limits<double>::infinity();
    }
    if (gamma) report.robust = *report.hinf_norm <= *gamma;
  } else if (gamma) {
    throw ValidationError("certify: gamma given without a performance channel");
  }
  return report;
}

}  // namespace

CertificateReport certify(const LinearSystem& sys,
                          const std::optional<PerformanceChannel>& ch,
                          const PolicyParams& p, std::optional<double> gamma) {
  sys.Validate();
  const Matrix k = extract_gain(p);
  Eigen::LLT<Matrix> llt(p.Q.mat());
  const SymMatrix pinv = SymMatrix::FromAverage(
      llt.solve(Matrix::Identity(sys.nx(), sys.nx())));
  CertificateReport report = CertifyImpl(sys, ch, k, pinv, gamma);

  const double stability_margin = margin(LmiMap::Stability(sys), p);
  if (stability_margin > 0.0 && !report.stable) {
    throw CertificateError(
        "certify: stability LMI margin is positive but ρ(A+BK) = " +
        std::to_string(report.spectral_radius) +
        "; solver tolerances are inconsistent");
  }
  if (ch && gamma) {
    const double hinf_margin = margin(LmiMap::Hinf(sys, *ch, *gamma), p);
    if (hinf_margin > 0.0 && !report.robust) {
      throw CertificateError(
          "certify: H∞ LMI margin is positive but the frequency sweep gives "
          "‖F(K)‖∞ = " +
          std::to_string(*report.hinf_norm) + " > γ = " +
          std::to_string(*gamma));
    }
  }
  return report;
}

CertificateReport certify_gain(const LinearSystem& sys,
                               const std::optional<PerformanceChannel>& ch,
                               const Matrix& k, std::optional<double> gamma) {
  sys.Validate();
  if (k.rows() != sys.nu() || k.cols() != sys.nx()) {
    throw ValidationError("certify_gain: K must be nu x nx");
  }
  RequireFinite(k, "K");
  const Matrix acl = sys.A + sys.B * k;
  const auto p = dlyap(acl, SymMatrix::Identity(sys.nx()));
  return CertifyImpl(sys, ch, k,
                     p ? *p : SymMatrix::Zero(sys.nx()), gamma);
}

}  // namespace robustclone
