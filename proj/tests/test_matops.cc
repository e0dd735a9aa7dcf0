#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "robustclone/errors.h"
#include "robustclone/matops.h"
#include "robustclone/rng.h"

namespace robustclone {
namespace {

SymMatrix Sym(std::initializer_list<std::initializer_list<double>> rows) {
  const int n = static_cast<int>(rows.size());
  Matrix m(n, n);
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return SymMatrix(m);
}

SymMatrix RandomSym(Rng& rng, int n, double scale = 1.0) {
  return SymMatrix::FromAverage(rng.UniformMatrix(n, n, -scale, scale));
}

TEST(SymMatrix, LowerTriangleFollowsUpper) {
  Matrix m(2, 2);
  m << 1, 2, 7, 3;
  const SymMatrix s(m);
  EXPECT_EQ(s(1, 0), 2.0);
  EXPECT_EQ(s.mat(), s.mat().transpose());
}

TEST(SymEig, DiagonalInput) {
  const SymEig e = sym_eig(Sym({{3, 0, 0}, {0, 1, 0}, {0, 0, 2}}));
  EXPECT_NEAR(e.values(0), 1.0, 1e-14);
  EXPECT_NEAR(e.values(1), 2.0, 1e-14);
  EXPECT_NEAR(e.values(2), 3.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(1, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(2, 1)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(0, 2)), 1.0, 1e-14);
}

TEST(SymEig, TwoByTwo) {
  const SymEig a = sym_eig(Sym({{0, 1}, {1, 0}}));
  EXPECT_NEAR(a.values(0), -1.0, 1e-14);
  EXPECT_NEAR(a.values(1), 1.0, 1e-14);
  const SymEig b = sym_eig(Sym({{2, 1}, {1, 2}}));
  EXPECT_NEAR(b.values(0), 1.0, 1e-14);
  EXPECT_NEAR(b.values(1), 3.0, 1e-14);
}

TEST(SymEig, ReconstructsRandomMatrices) {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + static_cast<int>(rng.Below(8));
    const SymMatrix s = RandomSym(rng, n, 3.0);
    const SymEig e = sym_eig(s);
    const Matrix v = e.vectors;
    EXPECT_LE((v.transpose() * v - Matrix::Identity(n, n)).norm(), 1e-10 * n);
    const Matrix rec = v * e.values.asDiagonal() * v.transpose();
    EXPECT_LE((rec - s.mat()).norm(), 1e-9 * s.norm());
    for (int i = 1; i < n; ++i) EXPECT_LE(e.values(i - 1), e.values(i));
  }
}

TEST(SymEig, RejectsNonFinite) {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = std::nan("");
  EXPECT_THROW(sym_eig(SymMatrix(m)), ValidationError);
}

TEST(PsdProject, ClipsNegativeEigenvalue) {
  const SymMatrix p = psd_project(Sym({{2, 0}, {0, -1}}), 0.0);
  EXPECT_NEAR((p.mat() - Sym({{2, 0}, {0, 0}}).mat()).norm(), 0.0, 1e-14);
}

TEST(PsdProject, Reassembles) {
  const SymMatrix p = psd_project(Sym({{0, 1}, {1, 0}}), 0.0);
  EXPECT_NEAR((p.mat() - Sym({{0.5, 0.5}, {0.5, 0.5}}).mat()).norm(), 0.0, 1e-14);
}

TEST(PsdProject, FeasibleInputUnchanged) {
  const SymMatrix s = Sym({{3, 1}, {1, 2}});
  EXPECT_EQ(psd_project(s, 0.5).mat(), s.mat());
}

TEST(PsdProject, RejectsNegativeFloor) {
  EXPECT_THROW(psd_project(SymMatrix::Identity(2), -1.0), ValidationError);
}

TEST(PsdProject, IdempotentAndNearest) {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(rng.Below(5));
    const double floor = rng.Uniform(0.0, 0.5);
    const SymMatrix s = RandomSym(rng, n, 2.0);
    const SymMatrix p = psd_project(s, floor);
    EXPECT_GE(min_eigenvalue(p), floor - 1e-12);
    EXPECT_LE((psd_project(p, floor).mat() - p.mat()).norm(), 1e-12);
    // Any feasible T is at least as far from S.
    for (int k = 0; k < 5; ++k) {
      const Matrix g = rng.UniformMatrix(n, n, -2, 2);
      const SymMatrix t2(g * g.transpose() + floor * Matrix::Identity(n, n));
      EXPECT_LE((p.mat() - s.mat()).norm(), (t2.mat() - s.mat()).norm() + 1e-12);
    }
  }
}

TEST(SpectralRadius, Examples) {
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 0.5, -0.9;
  EXPECT_NEAR(spectral_radius(d), 0.9, 1e-12);
  Matrix r(2, 2);
  r << 0, 1, -1, 0;
  EXPECT_NEAR(spectral_radius(r), 1.0, 1e-12);
  Matrix j(2, 2);
  j << 0.9, 1, 0, 0.9;
  EXPECT_NEAR(spectral_radius(j), 0.9, 1e-8);
}

TEST(SpectralRadius, MatchesTwoByTwoCharacteristicPolynomial) {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const Matrix a = rng.UniformMatrix(2, 2, -2, 2);
    const double tr = a.trace();
    const double det = a.determinant();
    const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4 * det));
    const double oracle =
        std::max(std::abs((tr + disc) / 2.0), std::abs((tr - disc) / 2.0));
    EXPECT_NEAR(spectral_radius(a), oracle, 1e-8 * std::max(1.0, oracle));
  }
}

TEST(Dlyap, ScalarCases) {
  Matrix a(1, 1);
  a(0, 0) = 0.0;
  auto p = dlyap(a, SymMatrix::Identity(1));
  ASSERT_TRUE(p);
  EXPECT_NEAR((*p)(0, 0), 1.0, 1e-14);
  a(0, 0) = 0.5;
  p = dlyap(a, SymMatrix::Identity(1));
  ASSERT_TRUE(p);
  EXPECT_NEAR((*p)(0, 0), 4.0 / 3.0, 1e-12);
  a(0, 0) = 1.1;
  EXPECT_FALSE(dlyap(a, SymMatrix::Identity(1)));
}

TEST(Dlyap, MatchesKroneckerSolveAndSpectralRadius) {
  Rng rng(14);
  int agree = 0;
  for (int t = 0; t < 120; ++t) {
    Matrix a = rng.UniformMatrix(4, 4, -1, 1);
    a *= rng.Uniform(0.8, 1.2) / spectral_radius(a);
    const bool stable = spectral_radius(a) < 1.0;
    const auto p = dlyap(a, SymMatrix::Identity(4));
    agree += stable == p.has_value();
    if (p && spectral_radius(a) < 0.99) {
      // (I − Aᵀ⊗Aᵀ) vec(P) = vec(I)
      Matrix kron(16, 16);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) kron.block(4 * i, 4 * j, 4, 4) = a(j, i) * a.transpose();
      const Vector rhs = Eigen::Map<const Vector>(Matrix::Identity(4, 4).eval().data(), 16);
      const Vector vp = (Matrix::Identity(16, 16) - kron).lu().solve(rhs);
      const Matrix oracle = Eigen::Map<const Matrix>(vp.data(), 4, 4);
      EXPECT_LE((p->mat() - oracle).norm(), 1e-7 * oracle.norm());
      const Matrix res = a.transpose() * p->mat() * a - p->mat() + Matrix::Identity(4, 4);
      EXPECT_LE(res.norm(), 1e-9 * 2.0);
    }
  }
  EXPECT_EQ(agree, 120);
}

TEST(Dare, ScalarGolden) {
  Matrix one = Matrix::Ones(1, 1);
  const DareSolution s = dare(one, one, SymMatrix::Identity(1), SymMatrix::Identity(1));
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  EXPECT_NEAR(s.P(0, 0), phi, 1e-8);
  EXPECT_NEAR(s.K(0, 0), -phi / (1.0 + phi), 1e-6);
  EXPECT_NEAR(s.K(0, 0), -0.618, 1e-3);
}

TEST(Dare, TrivialCases) {
  const Matrix zero = Matrix::Zero(1, 1);
  const Matrix one = Matrix::Ones(1, 1);
  DareSolution s = dare(zero, one, SymMatrix::Identity(1), SymMatrix::Identity(1));
  EXPECT_NEAR(s.P(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(s.K(0, 0), 0.0, 1e-14);
  Matrix a = Matrix::Identity(2, 2) * 0.5;
  s = dare(a, Matrix::Identity(2, 2), SymMatrix::Zero(2), SymMatrix::Identity(2));
  EXPECT_NEAR(s.P.norm(), 0.0, 1e-14);
  EXPECT_NEAR(s.K.norm(), 0.0, 1e-14);
}

TEST(Dare, RejectsIndefiniteInnovation) {
  const Matrix one = Matrix::Ones(1, 1);
  EXPECT_THROW(dare(one, one, SymMatrix::Identity(1), SymMatrix::Identity(1) * -5.0),
               ValidationError);
}

TEST(Svec, InnerProductMatchesTrace) {
  Rng rng(15);
  for (int n = 1; n <= 5; ++n) {
    const SymMatrix x = RandomSym(rng, n);
    const SymMatrix y = RandomSym(rng, n);
    EXPECT_EQ(svec(x).size(), svec_size(n));
    EXPECT_NEAR(svec(x).dot(svec(y)), (x.mat() * y.mat()).trace(), 1e-12);
    EXPECT_LE((smat(svec(x), n).mat() - x.mat()).norm(), 1e-14);
  }
}

}  // namespace
}  // namespace robustclone
