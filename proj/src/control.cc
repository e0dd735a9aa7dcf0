#include "robustclone/control.h"

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "robustclone/errors.h"

namespace robustclone {

Vector SampleInitialState(int nx, Rng& rng) {
  Vector x0(nx);
  for (int i = 0; i < nx; ++i) x0(i) = rng.Uniform(-1.0, 1.0);
  return x0;
}

Trajectory simulate(const LinearSystem& sys, const Matrix& k,
                    const NoiseModel& noise, const Vector& x0, int steps,
                    bool with_expert_noise, Rng& rng) {
  if (k.rows() != sys.nu() || k.cols() != sys.nx()) {
    throw ValidationError("simulate: K must be nu x nx");
  }
  if (x0.size() != sys.nx()) throw ValidationError("simulate: bad x0 size");
  if (steps < 0) throw ValidationError("simulate: negative horizon");
  const GaussianSampler process(noise.W);
  const GaussianSampler action(noise.Sigma.dim() == 0
                                   ? SymMatrix::Zero(sys.nu())
                                   : noise.Sigma);
  if (process.dim() != sys.nx() || action.dim() != sys.nu()) {
    throw ValidationError("simulate: noise covariances have wrong dimensions");
  }

  Trajectory traj;
  traj.states.reserve(steps + 1);
  traj.actions.reserve(steps);
  Vector x = x0;
  traj.states.push_back(x);
  for (int t = 0; t < steps; ++t) {
    Vector u = k * x;
    if (with_expert_noise) u += action.Draw(rng);
    const Vector w = process.Draw(rng);
    x = sys.A * x + sys.B * u + w;
    traj.actions.push_back(std::move(u));
    traj.states.push_back(x);
    if (!x.allFinite() || x.norm() > kDivergenceNorm) {
      traj.diverged = true;
      break;
    }
  }
  return traj;
}

Trajectory simulate(const LinearSystem& sys, const Matrix& k,
                    const NoiseModel& noise, int steps, bool with_expert_noise,
                    Rng& rng) {
  const Vector x0 = SampleInitialState(sys.nx(), rng);
  return simulate(sys, k, noise, x0, steps, with_expert_noise, rng);
}

Matrix expert_aggressive(const LinearSystem& sys, Rng& rng,
                         const SolverConfig& cfg) {
  SplittingSolver solver(LmiMap::Stability(sys), cfg);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const Matrix q0 = rng.UniformMatrix(sys.nx(), sys.nx(), -1.0, 1.0);
    const Matrix l0 = rng.UniformMatrix(sys.nu(), sys.nx(), -1.0, 1.0);
    try {
      solver.ResetWarmStart();
      const PolicyParams p = solver.Project(SymMatrix::FromAverage(q0), l0);
      return extract_gain(p);
    } catch (const SolverFailure&) {
    } catch (const CertificateError&) {
    } catch (const InfeasibleError&) {
    }
  }
  throw InfeasibleError(
      "expert_aggressive: projection failed for 10 random draws; the pair "
      "(A, B) is probably not stabilizable");
}

Matrix expert_lqr(const LinearSystem& sys, const SymMatrix& qc,
                  const SymMatrix& rc) {
  return dare(sys.A, sys.B, qc, rc).K;
}

namespace {

double GainAt(const Matrix& acl, const Matrix& ccl, const Matrix& b1,
              double omega) {
  using Complex = std::complex<double>;
  Eigen::MatrixXcd m = -acl.cast<Complex>();
  m.diagonal().array() += std::polar(1.0, omega);
  const Eigen::MatrixXcd x = m.partialPivLu().solve(b1.cast<Complex>());
  const Eigen::MatrixXcd g = ccl.cast<Complex>() * x;
  if (g.cols() == 1) return g.norm();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(g);
  return svd.singularValues()(0);
}

}  // namespace

double hinf_norm_sweep(const LinearSystem& sys, const PerformanceChannel& ch,
                       const Matrix& k, int grid_size) {
  ch.Validate(sys);
  if (grid_size < 2) throw ValidationError("hinf_norm_sweep: grid_size < 2");
  const Matrix acl = sys.A + sys.B * k;
  const Matrix ccl = ch.C1 + ch.D12 * k;
  if (ch.B1.norm() == 0.0 || ccl.norm() == 0.0) return 0.0;
  if (spectral_radius(acl) >= 1.0) return std::numeric_limits<double>::infinity();

  const double step = M_PI / (grid_size - 1);
  double best = -1.0;
  int best_i = 0;
  for (int i = 0; i < grid_size; ++i) {
    const double v = GainAt(acl, ccl, ch.B1, i * step);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }

  // Golden-section search on the bracket around the grid maximum.
  double lo = std::max(0.0, (best_i - 1) * step);
  double hi = std::min(M_PI, (best_i + 1) * step);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = GainAt(acl, ccl, ch.B1, c);
  double fd = GainAt(acl, ccl, ch.B1, d);
  for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = GainAt(acl, ccl, ch.B1, c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = GainAt(acl, ccl, ch.B1, d);
    }
    best = std::max({best, fc, fd});
  }
  return best;
}

namespace {

bool IsFeasible(const LmiMap& map, const SolverConfig& cfg,
                PolicyParams* out = nullptr) {
  try {
    SplittingSolver solver(map, cfg);
    PolicyParams p = solver.FindFeasible();
    if (out) *out = std::move(p);
    return true;
  } catch (const InfeasibleError&) {
    return false;
  } catch (const SolverFailure&) {
    return false;
  }
}

}  // namespace

double hinf_norm_lmi(const LinearSystem& sys, const PerformanceChannel& ch,
                     const Matrix& k, double tol, const SolverConfig& cfg) {
  ch.Validate(sys);
  if (!(tol > 0.0)) throw ValidationError("hinf_norm_lmi: tol must be positive");
  const Matrix acl = sys.A + sys.B * k;
  if (spectral_radius(acl) >= 1.0) {
    throw ValidationError("hinf_norm_lmi: K does not stabilize (A, B)");
  }
  if (ch.B1.norm() == 0.0 || (ch.C1 + ch.D12 * k).norm() == 0.0) return 0.0;

  auto feasible = [&](double gamma) {
    return IsFeasible(LmiMap::Hinf(sys, ch, gamma).WithTiedGain(k), cfg);
  };

  // The frequency sweep only seeds the bracket; both ends are confirmed by
  // LMI feasibility before bisecting, and the bracket widens if they are not.
  const double guess = std::max(hinf_norm_sweep(sys, ch, k), 1e-6);
  double hi = guess * (1.0 + 10.0 * tol);
  double lo = guess * (1.0 - tol);
  for (int i = 0; !feasible(hi); ++i) {
    if (i >= 40) {
      throw SolverFailure("hinf_norm_lmi: analysis LMI infeasible at γ = " +
                          std::to_string(hi));
    }
    lo = hi;
    hi *= 1.5;
  }
  while (lo > 1e-9 && feasible(lo)) {
    hi = lo;
    lo *= 0.5;
  }
  while (hi > lo * (1.0 + tol)) {
    const double mid = std::sqrt(lo * hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

HinfSynthesis synth_hinf(const LinearSystem& sys, const PerformanceChannel& ch,
                         double tol, const SolverConfig& cfg) {
  ch.Validate(sys);
  if (!(tol > 0.0)) throw ValidationError("synth_hinf: tol must be positive");
  if (!IsFeasible(LmiMap::Stability(sys), cfg)) {
    throw InfeasibleError(
        "synth_hinf: stability LMI is infeasible; (A, B) is not stabilizable");
  }

  PolicyParams best;
  auto feasible = [&](double gamma) {
    PolicyParams p;
    if (!IsFeasible(LmiMap::Hinf(sys, ch, gamma), cfg, &p)) return false;
    best = std::move(p);
    return true;
  };

  double hi = 1.0;
  double lo = 1e-6;
  if (!feasible(hi)) {
    while (true) {
      lo = hi;
      hi *= 2.0;
      if (hi > 65536.0) {
        throw InfeasibleError("synth_hinf: no feasible γ up to 2^16");
      }
      if (feasible(hi)) break;
    }
  }
  PolicyParams at_hi = best;
  while (hi > lo * (1.0 + tol)) {
    const double mid = std::sqrt(lo * hi);
    if (feasible(mid)) {
      hi = mid;
      at_hi = best;
    } else {
      lo = mid;
    }
  }

  HinfSynthesis out;
  out.gamma_star = hi;
  out.params = at_hi;
  out.K = extract_gain(at_hi);
  const double achieved = hinf_norm_sweep(sys, ch, out.K);
  if (!(achieved <= hi * (1.0 + 1e-2))) {
    throw CertificateError("synth_hinf: synthesized gain has ‖F(K)‖∞ = " +
                           std::to_string(achieved) + " > γ* = " +
                           std::to_string(hi));
  }
  return out;
}

CostResult cost_traj(const LinearSystem& sys, const Matrix& k,
                     const Matrix& kstar, const NoiseModel& noise, int trials,
                     int steps) {
  if (trials <= 0 || steps <= 0) {
    throw ValidationError("cost_traj: trials and steps must be positive");
  }
  CostResult result;
  double total = 0.0;
  for (int i = 0; i < trials; ++i) {
    Rng rng(DeriveSeed(noise.seed, {static_cast<std::uint64_t>(i)}));
    const Vector x0 = SampleInitialState(sys.nx(), rng);
    Rng rng_copy = rng;
    const Trajectory ref = simulate(sys, kstar, noise, x0, steps, false, rng);
    const Trajectory fit = simulate(sys, k, noise, x0, steps, false, rng_copy);
    double trial_cost = kCostCap;
    if (!fit.diverged && !ref.diverged) {
      double acc = 0.0;
      for (int t = 1; t <= steps; ++t) {
        acc += (ref.states[t] - fit.states[t]).squaredNorm();
      }
      trial_cost = std::min(acc / steps, kCostCap);
    } else {
      ++result.diverged;
    }
    total += trial_cost;
  }
  result.value = total / trials;
  return result;
}

namespace {

double QuadraticCost(const Trajectory& traj, const SymMatrix& qc,
                     const SymMatrix& rc, int steps) {
  if (traj.diverged) return kCostCap;
  double acc = 0.0;
  for (int t = 0; t < steps; ++t) {
    const Vector& x = traj.states[t];
    const Vector& u = traj.actions[t];
    acc += x.dot(qc.mat() * x) + u.dot(rc.mat() * u);
  }
  return std::min(acc / steps, kCostCap);
}

}  // namespace

CostResult cost_lqr(const LinearSystem& sys, const Matrix& k,
                    const Matrix& kstar, const SymMatrix& qc,
                    const SymMatrix& rc, const NoiseModel& noise, int trials,
                    int steps) {
  if (trials <= 0 || steps <= 0) {
    throw ValidationError("cost_lqr: trials and steps must be positive");
  }
  CostResult result;
  double jk = 0.0;
  double jstar = 0.0;
  for (int i = 0; i < trials; ++i) {
    Rng rng(DeriveSeed(noise.seed, {static_cast<std::uint64_t>(i)}));
    const Vector x0 = SampleInitialState(sys.nx(), rng);
    Rng rng_copy = rng;
    const Trajectory ref = simulate(sys, kstar, noise, x0, steps, false, rng);
    const Trajectory fit = simulate(sys, k, noise, x0, steps, false, rng_copy);
    if (fit.diverged) ++result.diverged;
    jstar += QuadraticCost(ref, qc, rc, steps);
    jk += QuadraticCost(fit, qc, rc, steps);
  }
  result.value = (jk - jstar) / trials;
  return result;
}

double cost_hinf(const LinearSystem& sys, const PerformanceChannel& ch,
                 const Matrix& k, const Matrix& kstar, double tol,
                 const SolverConfig& cfg) {
  if (spectral_radius(sys.A + sys.B * k) >= 1.0) {
    return std::numeric_limits<double>::infinity();
  }
  return hinf_norm_lmi(sys, ch, k, tol, cfg) -
         hinf_norm_lmi(sys, ch, kstar, tol, cfg);
}

}  // namespace robustclone
