#include <gtest/gtest.h>

#include "robustclone/errors.h"
#include "robustclone/lmi.h"
#include "robustclone/rng.h"
#include "robustclone/splitting.h"

namespace robustclone {
namespace {

Matrix Scalar(double v) { return Matrix::Constant(1, 1, v); }

LinearSystem ScalarSystem(double a, double b) {
  return {Scalar(a), Scalar(b), SymMatrix::Identity(1)};
}

PolicyParams ScalarParams(double q, double l) {
  return {SymMatrix(Scalar(q)), Scalar(l)};
}

LinearSystem RandomSystem(Rng& rng, int nx, int nu) {
  return {rng.UniformMatrix(nx, nx, -1, 1), rng.UniformMatrix(nx, nu, -1, 1),
          SymMatrix::Identity(nx) * 0.25};
}

PerformanceChannel RandomChannel(Rng& rng, int nx, int nu, int nd, int nz) {
  return {rng.UniformMatrix(nx, nd, -1, 1), rng.UniformMatrix(nz, nx, -1, 1),
          rng.UniformMatrix(nz, nu, -0.1, 0.1)};
}

PolicyParams RandomParams(Rng& rng, int nx, int nu) {
  return {SymMatrix::FromAverage(rng.UniformMatrix(nx, nx, -1, 1)),
          rng.UniformMatrix(nu, nx, -1, 1)};
}

// Block matrix written out entry by entry from the textbook layout.
Matrix HinfBlocks(const LinearSystem& s, const PerformanceChannel& c, double g,
                  const PolicyParams& p) {
  const int n = s.nx(), d = c.nd(), z = c.nz();
  Matrix m = Matrix::Zero(2 * n + d + z, 2 * n + d + z);
  const Matrix q = p.Q.mat();
  const Matrix off = s.A * q + s.B * p.L;
  const Matrix cz = q * c.C1.transpose() + p.L.transpose() * c.D12.transpose();
  m.block(0, 0, n, n) = q;
  m.block(0, n, n, n) = off;
  m.block(n, 0, n, n) = off.transpose();
  m.block(n, n, n, n) = q;
  m.block(0, 2 * n, n, d) = c.B1;
  m.block(2 * n, 0, d, n) = c.B1.transpose();
  m.block(n, 2 * n + d, n, z) = cz;
  m.block(2 * n + d, n, z, n) = cz.transpose();
  m.block(2 * n, 2 * n, d, d).setIdentity();
  m.block(2 * n + d, 2 * n + d, z, z) = g * g * Matrix::Identity(z, z);
  return m;
}

TEST(StabilityLmi, ScalarExamples) {
  const LmiMap map = LmiMap::Stability(ScalarSystem(0.5, 1.0));
  const SymMatrix m = map.Evaluate(ScalarParams(1.0, 0.0));
  EXPECT_NEAR(m(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(m(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(m(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(margin(map, ScalarParams(1.0, 0.0)), 0.5, 1e-14);

  const LmiMap bad = LmiMap::Stability(ScalarSystem(2.0, 0.0));
  for (double q : {0.1, 1.0, 10.0}) {
    EXPECT_LT(margin(bad, ScalarParams(q, 0.3)), 0.0);
  }
}

TEST(StabilityLmi, ZeroDynamicsGivesIdentity) {
  const LinearSystem s{Matrix::Zero(3, 3), Matrix::Identity(3, 2), SymMatrix::Zero(3)};
  const LmiMap map = LmiMap::Stability(s);
  const PolicyParams p{SymMatrix::Identity(3), Matrix::Zero(2, 3)};
  EXPECT_LE((map.Evaluate(p).mat() - Matrix::Identity(6, 6)).norm(), 1e-15);
  EXPECT_NEAR(margin(map, p), 1.0, 1e-14);
}

TEST(HinfLmi, MatchesBlockLayout) {
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    const LinearSystem s = RandomSystem(rng, 4, 2);
    const PerformanceChannel c = RandomChannel(rng, 4, 2, 1, 3);
    const double g = rng.Uniform(0.5, 3.0);
    const LmiMap map = LmiMap::Hinf(s, c, g);
    EXPECT_EQ(map.block_dim(), 2 * 4 + 1 + 3);
    const PolicyParams p = RandomParams(rng, 4, 2);
    EXPECT_LE((map.Evaluate(p).mat() - HinfBlocks(s, c, g, p)).norm(), 1e-13);
  }
}

TEST(HinfLmi, ScalarBracket) {
  const LinearSystem s = ScalarSystem(0.5, 0.0);
  const PerformanceChannel c{Scalar(1.0), Scalar(1.0), Scalar(0.0)};
  // Feasibility in Q alone (L = 0) decided by the splitting solver.
  const Matrix k0 = Matrix::Zero(1, 1);
  EXPECT_NO_THROW(find_feasible(LmiMap::Hinf(s, c, 2.05).WithTiedGain(k0)));
  EXPECT_THROW(find_feasible(LmiMap::Hinf(s, c, 1.95).WithTiedGain(k0)), InfeasibleError);
}

TEST(HinfLmi, LargeGammaReducesToStability) {
  Rng rng(22);
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    const LinearSystem s = RandomSystem(rng, 3, 1);
    const PerformanceChannel c = RandomChannel(rng, 3, 1, 1, 3);
    PolicyParams p = RandomParams(rng, 3, 1);
    p.Q = SymMatrix(p.Q.mat() + 2.0 * Matrix::Identity(3, 3));
    const double ms = margin(LmiMap::Stability(s), p);
    const double mh = margin(LmiMap::Hinf(s, c, 1e6), p);
    if (std::abs(ms) < 1e-3) continue;
    EXPECT_EQ(ms > 0, mh > 0);
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

TEST(HinfLmi, ZeroChannelDecouples) {
  Rng rng(23);
  for (int t = 0; t < 30; ++t) {
    const LinearSystem s = RandomSystem(rng, 3, 2);
    const PerformanceChannel c{Matrix::Zero(3, 1), Matrix::Zero(2, 3), Matrix::Zero(2, 2)};
    const PolicyParams p = RandomParams(rng, 3, 2);
    const double ms = margin(LmiMap::Stability(s), p);
    const double g = rng.Uniform(0.1, 5.0);
    const double mh = margin(LmiMap::Hinf(s, c, g), p);
    EXPECT_NEAR(mh, std::min({ms, 1.0, g * g}), 1e-12);
  }
}

TEST(HinfLmi, RejectsBadInputs) {
  Rng rng(24);
  const LinearSystem s = RandomSystem(rng, 3, 2);
  PerformanceChannel c = RandomChannel(rng, 3, 2, 1, 3);
  EXPECT_THROW(LmiMap::Hinf(s, c, 0.0), ValidationError);
  c.D12 = Matrix::Zero(3, 1);
  EXPECT_THROW(LmiMap::Hinf(s, c, 1.0), ValidationError);
}

TEST(LmiMap, AdjointConsistency) {
  Rng rng(25);
  for (int t = 0; t < 30; ++t) {
    const LinearSystem s = RandomSystem(rng, 4, 2);
    const PerformanceChannel c = RandomChannel(rng, 4, 2, 2, 3);
    const Matrix k = rng.UniformMatrix(2, 4, -1, 1);
    for (const LmiMap& map : {LmiMap::Stability(s), LmiMap::Hinf(s, c, 1.7),
                              LmiMap::Stability(s).WithTiedGain(k),
                              LmiMap::Hinf(s, c, 1.7).WithTiedGain(k)}) {
      const PolicyParams p = RandomParams(rng, 4, 2);
      const int m = map.block_dim();
      const SymMatrix sm = SymMatrix::FromAverage(rng.UniformMatrix(m, m, -1, 1));
      const double lhs = (map.ApplyLinear(p).mat() * sm.mat()).trace();
      const PolicyParams g = map.Adjoint(sm);
      double rhs = (p.Q.mat() * g.Q.mat()).trace();
      if (!map.tied()) rhs += (p.L.array() * g.L.array()).sum();
      EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
      EXPECT_EQ(map.Evaluate(p).mat(), map.Evaluate(p).mat().transpose());
    }
  }
}

TEST(LmiMap, OperatorMatrixAndPacking) {
  Rng rng(26);
  const LinearSystem s = RandomSystem(rng, 3, 2);
  const LmiMap map = LmiMap::Stability(s);
  EXPECT_EQ(map.num_vars(), svec_size(3) + 2 * 3);
  const PolicyParams p = RandomParams(rng, 3, 2);
  const Vector x = map.Pack(p);
  const PolicyParams back = map.Unpack(x);
  EXPECT_LE((back.Q.mat() - p.Q.mat()).norm(), 1e-15);
  EXPECT_LE((back.L - p.L).norm(), 1e-15);
  EXPECT_LE((map.operator_matrix() * x - svec(map.ApplyLinear(p))).norm(), 1e-13);
  // Pack preserves the Frobenius inner product.
  const PolicyParams p2 = RandomParams(rng, 3, 2);
  const double frob = (p.Q.mat().array() * p2.Q.mat().array()).sum() +
                      (p.L.array() * p2.L.array()).sum();
  EXPECT_NEAR(x.dot(map.Pack(p2)), frob, 1e-13);
}

TEST(LmiMap, TiedGainUsesKQ) {
  Rng rng(27);
  const LinearSystem s = RandomSystem(rng, 3, 2);
  const Matrix k = rng.UniformMatrix(2, 3, -1, 1);
  const LmiMap tied = LmiMap::Stability(s).WithTiedGain(k);
  EXPECT_EQ(tied.num_vars(), svec_size(3));
  PolicyParams p = RandomParams(rng, 3, 2);
  const SymMatrix mt = tied.Evaluate(p);
  p.L = k * p.Q.mat();
  EXPECT_LE((mt.mat() - LmiMap::Stability(s).Evaluate(p).mat()).norm(), 1e-14);
}

TEST(ExtractGain, Examples) {
  Rng rng(28);
  const Matrix k0 = rng.UniformMatrix(2, 3, -1, 1);
  EXPECT_LE((extract_gain({SymMatrix::Identity(3), k0}) - k0).norm(), 1e-15);
  EXPECT_LE((extract_gain({SymMatrix::Identity(3) * 2.0, 2.0 * k0}) - k0).norm(), 1e-15);
  EXPECT_NEAR(extract_gain(ScalarParams(4.0, -2.0))(0, 0), -0.5, 1e-15);
  const Matrix m = rng.UniformMatrix(3, 3, -1, 1);
  const SymMatrix q(m * m.transpose() + 0.1 * Matrix::Identity(3, 3));
  const Matrix l = rng.UniformMatrix(2, 3, -1, 1);
  EXPECT_LE((extract_gain({q, l}) * q.mat() - l).norm(), 1e-10 * l.norm());
}

TEST(ExtractGain, RejectsIndefiniteQ) {
  EXPECT_THROW(extract_gain(ScalarParams(-1.0, 1.0)), CertificateError);
}

TEST(Certify, ZeroDynamics) {
  const LinearSystem s{Matrix::Zero(2, 2), Matrix::Identity(2, 2), SymMatrix::Zero(2)};
  const CertificateReport r =
      certify(s, std::nullopt, {SymMatrix::Identity(2), Matrix::Zero(2, 2)});
  EXPECT_TRUE(r.stable);
  EXPECT_TRUE(r.robust);
  EXPECT_NEAR(r.spectral_radius, 0.0, 1e-15);
}

TEST(Certify, FeasiblePointsAreStabilizing) {
  Rng rng(29);
  int feasible = 0;
  for (int t = 0; t < 400 && feasible < 100; ++t) {
    const LinearSystem s = RandomSystem(rng, 3, 3);
    const LmiMap map = LmiMap::Stability(s);
    PolicyParams p = RandomParams(rng, 3, 3);
    p.Q = SymMatrix(p.Q.mat() * p.Q.mat() + 0.05 * Matrix::Identity(3, 3));
    // Shrink A + BK toward zero by picking L ≈ −B⁻¹AQ plus noise.
    const Matrix bp = s.B.completeOrthogonalDecomposition().pseudoInverse();
    p.L = -bp * s.A * p.Q.mat() + rng.Uniform(0.0, 0.6) * p.L;
    if (margin(map, p) <= 0) continue;
    ++feasible;
    const CertificateReport r = certify(s, std::nullopt, p);
    EXPECT_TRUE(r.stable);
    EXPECT_LT(spectral_radius(s.A + s.B * extract_gain(p)), 1.0);
  }
  EXPECT_EQ(feasible, 100);
}

TEST(Certify, GainWithoutParams) {
  const LinearSystem s = ScalarSystem(1.2, 1.0);
  const PerformanceChannel c{Scalar(1.0), Scalar(1.0), Scalar(0.0)};
  const CertificateReport ok = certify_gain(s, c, Scalar(-0.7), 2.5);
  EXPECT_TRUE(ok.stable);
  ASSERT_TRUE(ok.hinf_norm);
  EXPECT_NEAR(*ok.hinf_norm, 2.0, 1e-6);  // 1 / (1 − 0.5)
  EXPECT_TRUE(ok.robust);
  EXPECT_FALSE(certify_gain(s, c, Scalar(-0.7), 1.9).robust);
  EXPECT_FALSE(certify_gain(s, c, Scalar(0.0)).stable);
}

}  // namespace
}  // namespace robustclone
