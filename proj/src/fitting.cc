#include "robustclone/fitting.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "robustclone/errors.h"
#include "robustclone/rng.h"

namespace robustclone {

void Dataset::Validate() const {
  RequireFinite(X, "dataset X");
  RequireFinite(U, "dataset U");
  if (X.cols() < 1) throw ValidationError("dataset must hold at least one sample");
  if (X.cols() != U.cols()) {
    throw ValidationError("dataset X and U must have the same column count");
  }
}

void FitConfig::Validate() const {
  if (lambda && !(*lambda >= 0.0)) throw ValidationError("fit.lambda must be >= 0");
  if (!(step_size > 0.0)) throw ValidationError("fit.step_size must be positive");
  if (outer_iters <= 0) throw ValidationError("fit.outer_iters must be positive");
  if (!(admm_rho > 0.0)) throw ValidationError("fit.admm_rho must be positive");
  if (!(admm_prox >= 0.0)) throw ValidationError("fit.admm_prox must be >= 0");
  if (admm_inner_iters <= 0 || pgd_inner_iters <= 0) {
    throw ValidationError("fit inner iteration budgets must be positive");
  }
  if (batch < 0) throw ValidationError("fit.batch must be >= 0");
}

double FitConfig::ResolveLambda(const Dataset& data) const {
  if (lambda) return *lambda;
  return 1e-4 * data.U.squaredNorm() / data.N();
}

double bc_objective(const Matrix& k, const Dataset& data, double lambda) {
  return (k * data.X - data.U).squaredNorm() / data.N() +
         lambda * k.squaredNorm();
}

Matrix bc_gradient_K(const Matrix& k, const Dataset& data, double lambda) {
  return (2.0 / data.N()) * (k * data.X - data.U) * data.X.transpose() +
         2.0 * lambda * k;
}

PolicyParams grad_QL(const PolicyParams& p, const Dataset& data,
                     double lambda) {
  Eigen::LLT<Matrix> llt(p.Q.mat());
  if (llt.info() != Eigen::Success) {
    throw CertificateError("grad_QL: Q is not positive definite");
  }
  const Matrix k = llt.solve(p.L.transpose()).transpose();
  const Matrix g = bc_gradient_K(k, data, lambda);
  // K = LQ⁻¹ ⇒ dK = (dL − K dQ) Q⁻¹.
  const Matrix g_qinv = llt.solve(g.transpose()).transpose();
  const Matrix gq = -k.transpose() * g_qinv;
  return {SymMatrix::FromAverage(gq), g_qinv};
}

Matrix fit_unconstrained(const Dataset& data, double lambda) {
  data.Validate();
  if (!(lambda >= 0.0)) throw ValidationError("fit_unconstrained: lambda < 0");
  const int nx = static_cast<int>(data.X.rows());
  const Matrix gram = data.X * data.X.transpose() +
                      data.N() * lambda * Matrix::Identity(nx, nx);
  const Vector eig =
      Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(eig(0) > 1e-13 * eig(nx - 1))) {
    throw ValidationError(
        "fit_unconstrained: XXᵀ + NλI is singular (states do not span the "
        "state space); use lambda > 0");
  }
  return gram.llt().solve(data.X * data.U.transpose()).transpose();
}

Matrix admm_k_step(const Dataset& data, double lambda, const PolicyParams& p,
                   const Matrix& y, double rho) {
  const int nx = static_cast<int>(data.X.rows());
  const Matrix& q = p.Q.mat();
  const Matrix lhs = (2.0 / data.N()) * data.X * data.X.transpose() +
                     2.0 * lambda * Matrix::Identity(nx, nx) +
                     rho * q * q.transpose();
  const Matrix rhs = (2.0 / data.N()) * data.U * data.X.transpose() -
                     y * q.transpose() + rho * p.L * q.transpose();
  // K·lhs = rhs with lhs symmetric ⇒ lhs·Kᵀ = rhsᵀ.
  Eigen::LDLT<Matrix> ldlt(lhs);
  if (ldlt.info() != Eigen::Success) {
    throw SolverFailure("admm K-step: normal matrix factorization failed");
  }
  return ldlt.solve(rhs.transpose()).transpose();
}

namespace {

using Clock = std::chrono::steady_clock;

double ElapsedMs(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

double PairDot(const PolicyParams& a, const PolicyParams& b) {
  return (a.Q.mat().array() * b.Q.mat().array()).sum() +
         (a.L.array() * b.L.array()).sum();
}

PolicyParams PairSub(const PolicyParams& a, const PolicyParams& b) {
  return {a.Q - b.Q, a.L - b.L};
}

double PairNorm(const PolicyParams& a) { return std::sqrt(PairDot(a, a)); }

double ObjectiveQL(const PolicyParams& p, const Dataset& data, double lambda) {
  return bc_objective(extract_gain(p), data, lambda);
}

Dataset Columns(const Dataset& data, const std::vector<int>& idx) {
  Dataset out{Matrix(data.X.rows(), idx.size()),
              Matrix(data.U.rows(), idx.size())};
  for (size_t j = 0; j < idx.size(); ++j) {
    out.X.col(j) = data.X.col(idx[j]);
    out.U.col(j) = data.U.col(idx[j]);
  }
  return out;
}

void Finish(FitReport& report, const LmiMap& map,
            Clock::time_point start) {
  if (report.params) {
    report.K = extract_gain(*report.params);
    std::optional<double> gamma;
    if (map.kind() == LmiKind::kHinf) gamma = map.gamma();
    report.certificate =
        certify(map.system(), map.channel(), *report.params, gamma);
  }
  report.wall_time_ms = ElapsedMs(start);
}

// One projected-gradient step with Armijo backtracking on `batch`, starting
// from trial step `eta`. A trial whose projection fails is treated like one
// that fails the Armijo test. Returns false when no step length in the search
// range decreases the objective. On success `eta` holds the accepted step.
bool PgdStep(SplittingSolver& solver, const Dataset& batch, double lambda,
             const PolicyParams& g, int budget, PolicyParams& x, double& eta) {
  constexpr double kArmijo = 1e-4;
  const double fx = ObjectiveQL(x, batch, lambda);
  for (int ls = 0; ls < 60; ++ls) {
    PolicyParams cand;
    double fc;
    try {
      cand = solver.ProjectInexact(x.Q - g.Q * eta, Matrix(x.L - eta * g.L),
                                   x, budget);
      fc = ObjectiveQL(cand, batch, lambda);
    } catch (const SolverFailure&) {
      eta *= 0.5;
      continue;
    } catch (const CertificateError&) {
      eta *= 0.5;
      continue;
    }
    const PolicyParams delta = PairSub(cand, x);
    if (fc <= fx + kArmijo * PairDot(g, delta)) {
      const bool moved = PairNorm(delta) > 0.0;
      x = cand;
      return moved;
    }
    eta *= 0.5;
  }
  return false;
}

// Largest step that moves x by at most its own norm along −g.
double StepCap(const PolicyParams& x, const PolicyParams& g) {
  const double gn = PairNorm(g);
  return gn > 0.0 ? PairNorm(x) / gn : 1e6;
}

// Barzilai–Borwein step ⟨s, s⟩/⟨s, y⟩ from the last displacement s and
// gradient change y; `fallback` when the curvature estimate is not positive.
double BbStep(const PolicyParams& s, const PolicyParams& y, double fallback) {
  const double sy = PairDot(s, y);
  const double ss = PairDot(s, s);
  if (!(sy > 0.0) || !(ss > 0.0)) return fallback;
  return std::clamp(ss / sy, 1e-10, 1e10);
}

}  // namespace

FitReport fit_pgd(const Dataset& data, const LmiMap& map, const FitConfig& cfg,
                  const SolverConfig& scfg) {
  const auto start = Clock::now();
  data.Validate();
  cfg.Validate();
  if (data.X.rows() != map.nx() || data.U.rows() != map.nu()) {
    throw ValidationError("fit_pgd: dataset dimensions do not match the system");
  }
  const double lambda = cfg.ResolveLambda(data);
  FitReport report;
  report.method = "pgd";

  SplittingSolver solver(map, scfg);
  PolicyParams x = solver.FindFeasible();
  double fx = ObjectiveQL(x, data, lambda);
  PolicyParams best = x;
  double fbest = fx;
  report.objective_history.push_back(fx);
  report.feasibility_margins.push_back(margin(map, x));

  const bool minibatch = cfg.batch > 0 && data.N() >= kMiniBatchThreshold &&
                         cfg.batch < data.N();
  Rng rng(DeriveSeed(cfg.seed, {HashTag("pgd-batches")}));
  std::vector<int> order(data.N());
  std::iota(order.begin(), order.end(), 0);

  double eta = cfg.step_size;
  std::optional<PolicyParams> x_prev;
  std::optional<PolicyParams> g_prev;
  try {
    for (int it = 0; it < cfg.outer_iters; ++it) {
      bool moved = false;
      if (!minibatch) {
        const PolicyParams g = grad_QL(x, data, lambda);
        if (x_prev) {
          eta = BbStep(PairSub(x, *x_prev), PairSub(g, *g_prev),
                       std::min(eta * 2.0, 1e6));
        }
        eta = std::min(eta, StepCap(x, g));
        x_prev = x;
        g_prev = g;
        moved = PgdStep(solver, data, lambda, g, cfg.pgd_inner_iters, x, eta);
      } else {
        // One epoch of mini-batches drawn without replacement. The epoch is
        // kept only if the full-batch objective does not increase.
        for (int i = data.N() - 1; i > 0; --i) {
          std::swap(order[i], order[rng.Below(static_cast<std::uint64_t>(i) + 1)]);
        }
        PolicyParams trial = x;
        double trial_eta = eta;
        for (int b0 = 0; b0 < data.N(); b0 += cfg.batch) {
          const int b1 = std::min(data.N(), b0 + cfg.batch);
          const Dataset batch = Columns(
              data, std::vector<int>(order.begin() + b0, order.begin() + b1));
          const PolicyParams g = grad_QL(trial, batch, lambda);
          trial_eta = std::min(trial_eta, StepCap(trial, g));
          moved = PgdStep(solver, batch, lambda, g, cfg.pgd_inner_iters, trial,
                          trial_eta) ||
                  moved;
          trial_eta = std::min(trial_eta * 2.0, 1e6);
        }
        if (ObjectiveQL(trial, data, lambda) <= fx) {
          x = trial;
          eta = trial_eta;
        } else {
          eta *= 0.5;
          moved = eta > 1e-14;
        }
      }
      const double fnew = ObjectiveQL(x, data, lambda);
      const double decrease = fx - fnew;
      fx = fnew;
      report.objective_history.push_back(fx);
      report.feasibility_margins.push_back(margin(map, x));
      if (fx < fbest) {
        fbest = fx;
        best = x;
      }
      if (!moved || (decrease >= 0.0 && decrease <= 1e-16 * std::max(1.0, fx))) {
        break;
      }
      if (minibatch) eta = std::min(eta * 2.0, 1e6);
    }
  } catch (const SolverFailure& e) {
    report.valid = false;
    report.failure = e.what();
  } catch (const InfeasibleError& e) {
    report.valid = false;
    report.failure = e.what();
  }
  report.params = best;
  Finish(report, map, start);
  return report;
}

FitReport fit_admm(const Dataset& data, const LmiMap& map, const FitConfig& cfg,
                   const SolverConfig& scfg) {
  const auto start = Clock::now();
  data.Validate();
  cfg.Validate();
  if (data.X.rows() != map.nx() || data.U.rows() != map.nu()) {
    throw ValidationError("fit_admm: dataset dimensions do not match the system");
  }
  const double lambda = cfg.ResolveLambda(data);
  const double rho = cfg.admm_rho;
  FitReport report;
  report.method = "admm";

  SplittingSolver solver(map, scfg);
  PolicyParams ql = solver.FindFeasible();
  Matrix y = Matrix::Zero(map.nu(), map.nx());
  Matrix k_prev;

  try {
    for (int it = 0; it < cfg.outer_iters; ++it) {
      const Matrix k = admm_k_step(data, lambda, ql, y, rho);

      QuadraticObjective obj;
      obj.gain = k;
      obj.offset = y / rho;
      obj.weight = rho;
      if (cfg.admm_prox > 0.0) {
        obj.prox_center = ql;
        obj.prox_weight = cfg.admm_prox;
      }
      ql = solver.MinimizeInexact(obj, ql, cfg.admm_inner_iters);

      const Matrix r = k * ql.Q.mat() - ql.L;
      y += rho * r;
      const double res = r.norm();
      report.admm_primal_residuals.push_back(res);
      report.objective_history.push_back(bc_objective(k, data, lambda));
      report.feasibility_margins.push_back(margin(map, ql));

      const bool k_settled =
          k_prev.size() != 0 && (k - k_prev).norm() < 1e-10;
      k_prev = k;
      if (res < 1e-8 && k_settled) break;
    }
  } catch (const SolverFailure& e) {
    report.valid = false;
    report.failure = e.what();
  } catch (const InfeasibleError& e) {
    report.valid = false;
    report.failure = e.what();
  }
  report.params = ql;
  Finish(report, map, start);
  return report;
}

}  // namespace robustclone
