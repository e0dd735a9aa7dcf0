#pragma once

#include <optional>
#include <string_view>

#include <Eigen/Dense>

namespace robustclone {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. The upper triangle of whatever is handed to the
/// constructor is authoritative; the lower triangle is always rebuilt from it,
/// so a SymMatrix is symmetric bit-for-bit.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix Identity(int n);
  static SymMatrix Zero(int n);
  // (m + mᵀ) / 2, for inputs that are symmetric only up to roundoff.
  static SymMatrix FromAverage(const Matrix& m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  void set(int i, int j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }
  double norm() const { return m_.norm(); }

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix operator*(double s) const;

 private:
  Matrix m_;
};

inline SymMatrix operator*(double s, const SymMatrix& m) { return m * s; }

// Throws ValidationError if any entry is NaN or infinite.
void RequireFinite(const Matrix& m, std::string_view name);
void RequireSquare(const Matrix& m, std::string_view name);

struct SymEig {
  Vector values;   // ascending
  Matrix vectors;  // orthogonal, columns match values
};

SymEig sym_eig(const SymMatrix& s, std::string_view name = "matrix");

double min_eigenvalue(const SymMatrix& s);

/// Frobenius-nearest matrix whose smallest eigenvalue is at least `floor`.
SymMatrix psd_project(const SymMatrix& s, double floor);

/// Largest eigenvalue modulus of a general real square matrix.
double spectral_radius(const Matrix& a);

struct DlyapOptions {
  double residual_tol = 1e-9;   // relative to ‖Qc‖_F
  double magnitude_cap = 1e12;  // relative to ‖Qc‖_F
  int max_doublings = 64;
};

/// Solves AᵀPA − P + Qc = 0 by Smith doubling. Returns nullopt when the
/// iterates blow past the magnitude cap, which happens iff ρ(A) ≥ 1.
std::optional<SymMatrix> dlyap(const Matrix& a, const SymMatrix& qc,
                               const DlyapOptions& opts = {});

struct DareOptions {
  double residual_tol = 1e-8;  // relative to ‖P‖_F
  double step_tol = 1e-13;
  int max_iter = 100000;
};

struct DareSolution {
  SymMatrix P;
  Matrix K;  // u = K x
};

/// Stabilizing solution of the discrete algebraic Riccati equation via the
/// Riccati recursion P ← AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA + Q started at P = Q.
DareSolution dare(const Matrix& a, const Matrix& b, const SymMatrix& qc,
                  const SymMatrix& rc, const DareOptions& opts = {});

/// Half-vectorization scaled so that ⟨svec(X), svec(Y)⟩ = tr(XY). Entries are
/// ordered column by column over the upper triangle.
Vector svec(const SymMatrix& s);
SymMatrix smat(const Eigen::Ref<const Vector>& v, int n);
inline int svec_size(int n) { return n * (n + 1) / 2; }

}  // namespace robustclone
