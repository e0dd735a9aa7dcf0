#include <gtest/gtest.h>

#include <cmath>

#include "oracles.h"
#include "robustclone/control.h"
#include "robustclone/errors.h"
#include "robustclone/fitting.h"
#include "robustclone/rng.h"

namespace robustclone {
namespace {

namespace to = testing_oracles;

Dataset ScalarData() {
  Dataset d{Matrix(1, 2), Matrix(1, 2)};
  d.X << 1, 1;
  d.U << 1, 3;
  return d;
}

Dataset RandomData(Rng& rng, int nx, int nu, int n) {
  return {rng.UniformMatrix(nx, n, -1, 1), rng.UniformMatrix(nu, n, -2, 2)};
}

PolicyParams RandomPd(Rng& rng, int nx, int nu) {
  const Matrix m = rng.UniformMatrix(nx, nx, -1, 1);
  return {SymMatrix(m * m.transpose() + 0.5 * Matrix::Identity(nx, nx)),
          rng.UniformMatrix(nu, nx, -1, 1)};
}

TEST(Objective, Examples) {
  const Dataset d = ScalarData();
  EXPECT_DOUBLE_EQ(bc_objective(Matrix::Constant(1, 1, 2.0), d, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(bc_objective(Matrix::Zero(1, 1), d, 0.0), (1.0 + 9.0) / 2.0);
  EXPECT_DOUBLE_EQ(bc_gradient_K(Matrix::Constant(1, 1, 2.0), d, 0.0)(0, 0), 0.0);

  Rng rng(41);
  const Dataset r = RandomData(rng, 3, 2, 7);
  const Matrix k = rng.UniformMatrix(2, 3, -1, 1);
  EXPECT_NEAR(bc_objective(k, Dataset{r.X, k * r.X}, 0.0), 0.0, 1e-28);
  EXPECT_LE((bc_gradient_K(Matrix::Zero(2, 3), r, 0.0) + 2.0 / 7 * r.U * r.X.transpose()).norm(),
            1e-14);
}

TEST(Objective, GradientMatchesFiniteDifferences) {
  Rng rng(42);
  for (int t = 0; t < 20; ++t) {
    const Dataset d = RandomData(rng, 3, 2, 9);
    const Matrix k = rng.UniformMatrix(2, 3, -1, 1);
    const double lambda = t % 2 ? 1.0 : 0.0;
    const Matrix g = bc_gradient_K(k, d, lambda);
    Matrix fd(2, 3);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j) {
        Matrix e = Matrix::Zero(2, 3);
        e(i, j) = 1e-6;
        fd(i, j) = (bc_objective(k + e, d, lambda) - bc_objective(k - e, d, lambda)) / 2e-6;
      }
    EXPECT_LE((g - fd).norm(), 1e-6 * std::max(1.0, g.norm()));
  }
}

TEST(GradQL, IdentityQGivesKGradient) {
  Rng rng(43);
  const Dataset d = RandomData(rng, 3, 2, 8);
  const Matrix l = rng.UniformMatrix(2, 3, -1, 1);
  const PolicyParams g = grad_QL({SymMatrix::Identity(3), l}, d, 0.3);
  EXPECT_LE((g.L - bc_gradient_K(l, d, 0.3)).norm(), 1e-13);
}

TEST(GradQL, MatchesFiniteDifferences) {
  Rng rng(44);
  for (int t = 0; t < 20; ++t) {
    const Dataset d = RandomData(rng, 3, 2, 10);
    const PolicyParams p = RandomPd(rng, 3, 2);
    const double lambda = t % 2 ? 1.0 : 0.0;
    const PolicyParams g = grad_QL(p, d, lambda);
    const auto [fq, fl] = to::FiniteDiffQL(p.Q.mat(), p.L, d, lambda);
    const double scale = std::sqrt(fq.squaredNorm() + fl.squaredNorm());
    const double err =
        std::sqrt((g.Q.mat() - fq).squaredNorm() + (g.L - fl).squaredNorm());
    EXPECT_LE(err, 1e-5 * scale);
  }
}

TEST(GradQL, RejectsIndefiniteQ) {
  Rng rng(45);
  const Dataset d = RandomData(rng, 2, 1, 4);
  EXPECT_THROW(grad_QL({SymMatrix::Identity(2) * -1.0, Matrix::Zero(1, 2)}, d, 0.0),
               CertificateError);
}

TEST(FitUnconstrained, Examples) {
  EXPECT_NEAR(fit_unconstrained(ScalarData(), 0.0)(0, 0), 2.0, 1e-14);
  Rng rng(46);
  const Matrix kstar = rng.UniformMatrix(2, 4, -1, 1);
  const Matrix x = rng.UniformMatrix(4, 12, -1, 1);
  EXPECT_LE((fit_unconstrained({x, kstar * x}, 0.0) - kstar).norm(), 1e-10);
  EXPECT_LE(fit_unconstrained({x, kstar * x}, 1e8).norm(), 1e-6);
}

TEST(FitUnconstrained, StationaryAndScaleInvariant) {
  Rng rng(47);
  const Dataset d = RandomData(rng, 4, 2, 15);
  const Matrix k = fit_unconstrained(d, 0.1);
  EXPECT_LE(bc_gradient_K(k, d, 0.1).norm(), 1e-12);
  const Matrix k0 = fit_unconstrained(d, 0.0);
  const Matrix kc = fit_unconstrained({3.0 * d.X, 3.0 * d.U}, 0.0);
  EXPECT_LE((k0 - kc).norm(), 1e-10);
  EXPECT_NEAR(bc_objective(k0, {3.0 * d.X, 3.0 * d.U}, 0.0), 9.0 * bc_objective(k0, d, 0.0),
              1e-10);
}

TEST(FitUnconstrained, RankDeficientNeedsRidge) {
  Dataset d{Matrix::Ones(2, 3), Matrix::Ones(1, 3)};
  EXPECT_THROW(fit_unconstrained(d, 0.0), ValidationError);
  EXPECT_NO_THROW(fit_unconstrained(d, 0.1));
}

TEST(FitConfig, Validation) {
  FitConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.lambda = -1.0;
  EXPECT_THROW(c.Validate(), ValidationError);
  c = {};
  c.admm_rho = 0.0;
  EXPECT_THROW(c.Validate(), ValidationError);
  c = {};
  c.step_size = -1.0;
  EXPECT_THROW(c.Validate(), ValidationError);
}

TEST(AdmmKStep, MatchesProbingOracle) {
  Rng rng(48);
  for (int t = 0; t < 20; ++t) {
    const Dataset d = RandomData(rng, 4, 2, 6);
    const PolicyParams p = RandomPd(rng, 4, 2);
    const Matrix y = rng.UniformMatrix(2, 4, -1, 1);
    const double rho = rng.Uniform(0.1, 3.0);
    const double lambda = t % 2 ? 0.01 : 0.0;
    const Matrix k = admm_k_step(d, lambda, p, y, rho);
    const Matrix oracle = to::MinimizeQuadraticByProbing(
        [&](const Matrix& kk) {
          return to::KStepObjective(kk, d, lambda, p.Q.mat(), p.L, y, rho);
        },
        2, 4);
    EXPECT_LE((k - oracle).norm(), 1e-8 * std::max(1.0, oracle.norm()));
  }
}

LinearSystem StableSystem(Rng& rng, int nx, int nu) {
  Matrix a = rng.UniformMatrix(nx, nx, -1, 1);
  a *= 0.6 / spectral_radius(a);
  return {a, rng.UniformMatrix(nx, nu, -1, 1), SymMatrix::Identity(nx) * 0.25};
}

TEST(FitPgd, InteriorOptimumRecoversExpert) {
  Rng rng(49);
  const LinearSystem s = StableSystem(rng, 3, 2);
  const Matrix kstar = Matrix::Zero(2, 3) + 0.05 * rng.UniformMatrix(2, 3, -1, 1);
  const Matrix x = rng.UniformMatrix(3, 40, -1, 1);
  FitConfig cfg;
  cfg.lambda = 0.0;
  cfg.outer_iters = 1000;
  const FitReport r = fit_pgd({x, kstar * x}, LmiMap::Stability(s), cfg);
  ASSERT_TRUE(r.valid) << r.failure;
  EXPECT_LE((r.K - kstar).norm(), 1e-3);
  ASSERT_TRUE(r.certificate);
  EXPECT_TRUE(r.certificate->stable);
}

TEST(FitPgd, BoundaryOptimumAndMonotoneHistory) {
  Rng rng(50);
  const LinearSystem s{Matrix::Constant(1, 1, 1.5), Matrix::Ones(1, 1), SymMatrix::Identity(1)};
  // Unconstrained optimum K = 0 is not stabilizing; feasible K lies in (−2.5, −0.5).
  const Dataset d{rng.UniformMatrix(1, 20, -1, 1), Matrix::Zero(1, 20)};
  const SolverConfig scfg;
  FitConfig cfg;
  cfg.lambda = 0.0;
  const FitReport r = fit_pgd(d, LmiMap::Stability(s), cfg, scfg);
  ASSERT_TRUE(r.valid) << r.failure;
  EXPECT_NEAR(r.K(0, 0), -0.5, 1e-3);
  EXPECT_LT(spectral_radius(s.A + s.B * r.K), 1.0);
  EXPECT_GE(bc_objective(r.K, d, 0.0), bc_objective(fit_unconstrained(d, 0.0), d, 0.0));
  for (size_t i = 1; i < r.objective_history.size(); ++i) {
    EXPECT_LE(r.objective_history[i], r.objective_history[i - 1] + 1e-12);
  }
  for (double m : r.feasibility_margins) EXPECT_GE(m, scfg.eps - 10 * scfg.tol_primal);
  EXPECT_TRUE(r.admm_primal_residuals.empty());
}

TEST(FitPgd, MiniBatchPath) {
  Rng rng(51);
  const LinearSystem s = StableSystem(rng, 3, 2);
  const Matrix kstar = 0.1 * rng.UniformMatrix(2, 3, -1, 1);
  const Matrix x = rng.UniformMatrix(3, 120, -1, 1);
  FitConfig cfg;
  cfg.batch = 30;
  cfg.outer_iters = 60;
  const FitReport r = fit_pgd({x, kstar * x}, LmiMap::Stability(s), cfg);
  ASSERT_TRUE(r.valid) << r.failure;
  EXPECT_TRUE(r.certificate->stable);
  EXPECT_LE((r.K - kstar).norm(), 0.05);
}

TEST(FitPgd, InfeasibleMapPropagates) {
  Rng rng(52);
  const LinearSystem s{Matrix::Constant(1, 1, 2.0), Matrix::Zero(1, 1), SymMatrix::Identity(1)};
  const Dataset d = RandomData(rng, 1, 1, 5);
  EXPECT_THROW(fit_pgd(d, LmiMap::Stability(s), FitConfig{}), InfeasibleError);
  EXPECT_THROW(fit_admm(d, LmiMap::Stability(s), FitConfig{}), InfeasibleError);
}

TEST(FitAdmm, FeasibleRidgeOptimumIsFixedPoint) {
  Rng rng(53);
  const LinearSystem s = StableSystem(rng, 3, 2);
  const Dataset d{rng.UniformMatrix(3, 30, -1, 1), 0.1 * rng.UniformMatrix(2, 30, -1, 1)};
  FitConfig cfg;
  cfg.lambda = 0.01;
  cfg.outer_iters = 500;
  const FitReport r = fit_admm(d, LmiMap::Stability(s), cfg);
  ASSERT_TRUE(r.valid) << r.failure;
  EXPECT_LE((r.K - fit_unconstrained(d, 0.01)).norm(), 1e-4);
  EXPECT_LT(r.admm_primal_residuals.back(), 1e-5);
  EXPECT_TRUE(r.certificate->stable);
}

TEST(FitAdmm, ConstrainedCaseCertified) {
  Rng rng(54);
  const LinearSystem s{Matrix::Constant(1, 1, 1.5), Matrix::Ones(1, 1), SymMatrix::Identity(1)};
  const Dataset d{rng.UniformMatrix(1, 20, -1, 1), Matrix::Zero(1, 20)};
  FitConfig cfg;
  cfg.lambda = 0.0;
  cfg.outer_iters = 500;
  const FitReport r = fit_admm(d, LmiMap::Stability(s), cfg);
  ASSERT_TRUE(r.valid) << r.failure;
  EXPECT_TRUE(r.certificate->stable);
  EXPECT_LT(std::abs(1.5 + r.K(0, 0)), 1.0);
  // The split problem is nonconvex; ADMM may settle on a stabilizing gain
  // other than the boundary optimum K = −0.5, never on a better one.
  EXPECT_GE(bc_objective(r.K, d, 0.0), bc_objective(Matrix::Constant(1, 1, -0.5), d, 0.0) - 1e-3);
  EXPECT_FALSE(r.admm_primal_residuals.empty());
}

}  // namespace
}  // namespace robustclone
