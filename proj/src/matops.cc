#include "robustclone/matops.h"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "robustclone/errors.h"

namespace robustclone {

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw ValidationError("SymMatrix: input is " + std::to_string(m.rows()) +
                          "x" + std::to_string(m.cols()) + ", not square");
  }
  m_ = m.selfadjointView<Eigen::Upper>();
}

SymMatrix SymMatrix::Identity(int n) {
  return SymMatrix(Matrix::Identity(n, n));
}

SymMatrix SymMatrix::Zero(int n) { return SymMatrix(Matrix::Zero(n, n)); }

SymMatrix SymMatrix::FromAverage(const Matrix& m) {
  RequireSquare(m, "SymMatrix::FromAverage input");
  return SymMatrix(Matrix(0.5 * (m + m.transpose())));
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  return SymMatrix(Matrix(m_ + o.m_));
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  return SymMatrix(Matrix(m_ - o.m_));
}

SymMatrix SymMatrix::operator*(double s) const {
  return SymMatrix(Matrix(m_ * s));
}

void RequireFinite(const Matrix& m, std::string_view name) {
  if (!m.allFinite()) {
    throw ValidationError(std::string(name) + " has non-finite entries");
  }
}

void RequireSquare(const Matrix& m, std::string_view name) {
  if (m.rows() != m.cols()) {
    throw ValidationError(std::string(name) + " must be square, got " +
                          std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()));
  }
}

SymEig sym_eig(const SymMatrix& s, std::string_view name) {
  RequireFinite(s.mat(), name);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.mat());
  if (solver.info() != Eigen::Success) {
    throw SolverFailure("sym_eig: eigenvalue iteration did not converge for " +
                        std::string(name));
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double min_eigenvalue(const SymMatrix& s) {
  if (s.dim() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.mat(),
                                               Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw SolverFailure("min_eigenvalue: eigenvalue iteration did not converge");
  }
  return solver.eigenvalues()(0);
}

SymMatrix psd_project(const SymMatrix& s, double floor) {
  if (!(floor >= 0.0)) throw ValidationError("psd_project: floor must be >= 0");
  const SymEig eig = sym_eig(s, "psd_project input");
  if (eig.values.size() == 0 || eig.values(0) >= floor) return s;
  const Vector clipped = eig.values.cwiseMax(floor);
  return SymMatrix(
      Matrix(eig.vectors * clipped.asDiagonal() * eig.vectors.transpose()));
}

double spectral_radius(const Matrix& a) {
  RequireSquare(a, "spectral_radius input");
  RequireFinite(a, "spectral_radius input");
  if (a.rows() == 0) return 0.0;
  // Hessenberg reduction followed by shifted QR (real Schur form).
  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw SolverFailure("spectral_radius: QR iteration did not converge");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

std::optional<SymMatrix> dlyap(const Matrix& a, const SymMatrix& qc,
                               const DlyapOptions& opts) {
  RequireSquare(a, "dlyap A");
  RequireFinite(a, "dlyap A");
  RequireFinite(qc.mat(), "dlyap Qc");
  if (a.rows() != qc.dim()) {
    throw ValidationError("dlyap: A and Qc dimensions differ");
  }
  const double qnorm = qc.norm();
  if (qnorm == 0.0) return SymMatrix::Zero(qc.dim());

  const double cap = opts.magnitude_cap * qnorm;
  Matrix p = qc.mat();
  Matrix ak = a;
  bool converged = false;
  for (int k = 0; k < opts.max_doublings; ++k) {
    const Matrix increment = ak.transpose() * p * ak;
    p += increment;
    if (!p.allFinite() || p.norm() > cap) return std::nullopt;
    if (increment.norm() <= 1e-17 * p.norm()) {
      converged = true;
      break;
    }
    ak = ak * ak;
  }
  if (!converged) return std::nullopt;

  SymMatrix sol = SymMatrix::FromAverage(p);
  const double residual =
      (a.transpose() * sol.mat() * a - sol.mat() + qc.mat()).norm();
  if (residual > opts.residual_tol * qnorm) {
    // Doubling converged but roundoff swamped the answer; this only happens
    // when ρ(A) is within roundoff of 1.
    return std::nullopt;
  }
  return sol;
}

DareSolution dare(const Matrix& a, const Matrix& b, const SymMatrix& qc,
                  const SymMatrix& rc, const DareOptions& opts) {
  RequireSquare(a, "dare A");
  RequireFinite(a, "dare A");
  RequireFinite(b, "dare B");
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.cols());
  if (b.rows() != n || qc.dim() != n || rc.dim() != m) {
    throw ValidationError("dare: inconsistent dimensions");
  }

  auto gain = [&](const Matrix& p) -> Matrix {
    const Matrix innovation = rc.mat() + b.transpose() * p * b;
    Eigen::LLT<Matrix> llt(innovation);
    if (llt.info() != Eigen::Success) {
      throw ValidationError("dare: R + BᵀPB is not positive definite");
    }
    return -llt.solve(b.transpose() * p * a);
  };

  Matrix p = qc.mat();
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const Matrix k = gain(p);
    // Equivalent to the textbook recursion since AᵀPB(R+BᵀPB)⁻¹BᵀPA = −AᵀPBK.
    Matrix next = a.transpose() * p * a + a.transpose() * p * b * k + qc.mat();
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) break;
    const double step = (next - p).norm();
    p = std::move(next);
    if (step <= opts.step_tol * std::max(1.0, p.norm())) break;
  }
  if (it >= opts.max_iter || !p.allFinite()) {
    throw SolverFailure("dare: Riccati recursion did not converge", 0.0, 0.0,
                        it);
  }

  const Matrix k = gain(p);
  const Matrix residual = p - (a.transpose() * p * a +
                               a.transpose() * p * b * k + qc.mat());
  if (residual.norm() > opts.residual_tol * p.norm()) {
    throw SolverFailure("dare: residual above tolerance", residual.norm());
  }
  if (spectral_radius(a + b * k) >= 1.0) {
    throw SolverFailure("dare: fixed point is not stabilizing");
  }
  return {SymMatrix(p), k};
}

Vector svec(const SymMatrix& s) {
  const int n = s.dim();
  Vector v(svec_size(n));
  int idx = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      v(idx++) = (i == j) ? s(i, i) : M_SQRT2 * s(i, j);
    }
  }
  return v;
}

SymMatrix smat(const Eigen::Ref<const Vector>& v, int n) {
  if (v.size() != svec_size(n)) {
    throw ValidationError("smat: vector length does not match dimension");
  }
  Matrix m(n, n);
  int idx = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      m(i, j) = (i == j) ? v(idx) : v(idx) * M_SQRT1_2;
      ++idx;
    }
  }
  return SymMatrix(m);
}

}  // namespace robustclone
