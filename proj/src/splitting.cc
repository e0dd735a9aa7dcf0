#include "robustclone/splitting.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "robustclone/errors.h"

namespace robustclone {

namespace {

// Margin added to eps inside the solver so that a point whose consensus
// residual is just under tolerance still clears eps.
double InternalShift(const SolverConfig& cfg) {
  return cfg.eps + 10.0 * cfg.tol_primal;
}

// Columns map packed decision vectors to [svec(Q); vec(L)] of the full pair.
Matrix PairEmbedding(const LmiMap& map) {
  const int nq = svec_size(map.nx());
  const int nl = map.nu() * map.nx();
  const int nv = map.num_vars();
  Matrix f(nq + nl, nv);
  Vector e = Vector::Zero(nv);
  for (int j = 0; j < nv; ++j) {
    e(j) = 1.0;
    const PolicyParams p = map.Unpack(e);
    f.col(j).head(nq) = svec(p.Q);
    f.col(j).tail(nl) = Eigen::Map<const Vector>(p.L.data(), nl);
    e(j) = 0.0;
  }
  return f;
}

Vector PairVector(const PolicyParams& p) {
  const int nq = svec_size(p.Q.dim());
  Vector v(nq + p.L.size());
  v.head(nq) = svec(p.Q);
  v.tail(p.L.size()) = Eigen::Map<const Vector>(p.L.data(), p.L.size());
  return v;
}

constexpr int kPolishEvery = 100;
constexpr int kInteriorAfter = 1000;

// Type-II Anderson acceleration of a fixed-point map z ↦ T(z), fed the
// residuals f = T(z) − z of successive iterates.
class AndersonAccelerator {
 public:
  explicit AndersonAccelerator(int memory) : memory_(memory) {}

  void Reset() {
    dz_.clear();
    df_.clear();
    has_prev_ = false;
  }

  // Accelerated successor of z, or nullopt when the plain step T(z) should
  // be taken (no history yet, or a degenerate least-squares system).
  std::optional<Vector> Extrapolate(const Vector& z, const Vector& f) {
    if (memory_ <= 0) return std::nullopt;
    if (has_prev_) {
      dz_.push_back(z - z_prev_);
      df_.push_back(f - f_prev_);
      if (static_cast<int>(dz_.size()) > memory_) {
        dz_.erase(dz_.begin());
        df_.erase(df_.begin());
      }
    }
    z_prev_ = z;
    f_prev_ = f;
    has_prev_ = true;
    if (dz_.empty()) return std::nullopt;

    const int k = static_cast<int>(dz_.size());
    Matrix dz(z.size(), k), df(z.size(), k);
    for (int j = 0; j < k; ++j) {
      dz.col(j) = dz_[j];
      df.col(j) = df_[j];
    }
    Matrix gram = df.transpose() * df;
    gram.diagonal().array() += 1e-10 * gram.trace() + 1e-300;
    const Vector gamma = gram.ldlt().solve(df.transpose() * f);
    Vector next = z + f - (dz + df) * gamma;
    if (!next.allFinite()) {
      Reset();
      return std::nullopt;
    }
    return next;
  }

 private:
  int memory_;
  std::vector<Vector> dz_;
  std::vector<Vector> df_;
  Vector z_prev_;
  Vector f_prev_;
  bool has_prev_ = false;
};

struct Polished {
  Vector x;
  Vector s;
  Vector u;
  double r_prim;
  double r_dual;
};

// Full KKT test of a candidate (x, Z) for
//     minimize ½xᵀPx + qᵀx  subject to  smat(Ax + b) ⪰ 0,
// with Z projected onto the cone first. On success the pair is returned in
// the splitting solver's (S, U = −Z/σ) coordinates.
std::optional<Polished> CheckKkt(const Matrix& a, const Vector& b,
                                 const Matrix& p, const Vector& q,
                                 const Vector& x, const SymMatrix& z,
                                 double sigma, const SolverConfig& cfg) {
  const int m = z.dim();
  const Vector ax = a * x + b;
  Polished out;
  out.x = x;
  out.s = svec(psd_project(smat(ax, m), 0.0));
  const Vector zv = svec(psd_project(z, 0.0));
  const Vector px = p * x;
  const Vector atz = a.transpose() * zv;
  out.r_prim = (ax - out.s).norm();
  out.r_dual = (px + q - atz).norm();
  const double dual_scale = 1.0 + std::max({px.norm(), q.norm(), atz.norm()});
  const double gap = std::abs(out.s.dot(zv));
  if (out.r_prim <= cfg.tol_primal && out.r_dual <= cfg.tol_dual * dual_scale &&
      gap <= cfg.tol_primal * (1.0 + zv.norm())) {
    out.u = -zv / sigma;
    return out;
  }
  return std::nullopt;
}

std::vector<Matrix> BasisMatrices(const Matrix& a, int m) {
  std::vector<Matrix> basis(a.cols());
  for (int i = 0; i < a.cols(); ++i) basis[i] = smat(a.col(i), m).mat();
  return basis;
}

// Newton refinement on a guessed face of the cone. For a face of dimension
// k (the dual Z = U₀YU₀ᵀ has rank k) the solution satisfies
//     U₀ᵀ M(x) U₀ = 0,  Px + q = 𝒜*(Z),
// with U₀ spanning the null space of M(x). Each pass solves the SQP system
// of that problem at the eigenvectors of M(x); the Hessian carries the
// curvature of the null space, 2·tr(Y Bᵢ D⁻¹ Bⱼᵀ) with Bᵢ = U₀ᵀ𝒜ᵢU₁ and
// D = U₁ᵀM(x)U₁. Candidate k are the negative count of v (the matrix whose
// eigen-split gives the ADMM pair) and its neighbours, for eigenvalues that
// have not separated yet.
std::optional<Polished> FacePolish(const Matrix& a, const Vector& b,
                                   const Matrix& p, const Vector& q,
                                   const SymMatrix& v0, const Vector& x0,
                                   const SymMatrix& z0, double sigma,
                                   const SolverConfig& cfg) {
  constexpr int kPasses = 8;
  const int m = v0.dim();
  const int n = static_cast<int>(a.cols());
  const Vector eig0 = sym_eig(v0, "polish iterate").values;
  int negative = 0;
  while (negative < m && eig0(negative) < 0.0) ++negative;
  const std::vector<Matrix> basis = BasisMatrices(a, m);

  for (int k : {negative, negative + 1, negative - 1}) {
    if (k < 1 || k >= m) continue;
    const int r = m - k;
    const int nc = k * (k + 1) / 2;
    Vector x = x0;
    Matrix zmat = z0.mat();
    for (int pass = 0; pass < kPasses; ++pass) {
      const SymMatrix mx_sym = smat(a * x + b, m);
      const Matrix& mx = mx_sym.mat();
      const Matrix vecs = sym_eig(mx_sym, "polish iterate").vectors;
      const Matrix u0 = vecs.leftCols(k);
      const Matrix u1 = vecs.rightCols(r);
      const Matrix y = u0.transpose() * zmat * u0;
      const Eigen::LLT<Matrix> dfac(u1.transpose() * mx * u1);
      if (dfac.info() != Eigen::Success) break;

      std::vector<Matrix> bi(n);
      std::vector<Matrix> ci(n);
      for (int i = 0; i < n; ++i) {
        bi[i] = u0.transpose() * basis[i] * u1;
        ci[i] = y * dfac.solve(bi[i].transpose()).transpose();
      }
      Matrix curv(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
          curv(i, j) = ci[i].cwiseProduct(bi[j]).sum() +
                       ci[j].cwiseProduct(bi[i]).sum();
          curv(j, i) = curv(i, j);
        }
      }

      Matrix w(a.rows(), nc);
      int col = 0;
      for (int j = 0; j < k; ++j) {
        for (int i = 0; i <= j; ++i) {
          Matrix e = u0.col(i) * u0.col(j).transpose();
          if (i != j) e = (e + e.transpose()).eval() / std::sqrt(2.0);
          w.col(col++) = svec(SymMatrix::FromAverage(e));
        }
      }
      const Matrix g = w.transpose() * a;
      Matrix kkt = Matrix::Zero(n + nc, n + nc);
      kkt.topLeftCorner(n, n) = p + curv;
      kkt.topRightCorner(n, nc) = g.transpose();
      kkt.bottomLeftCorner(nc, n) = g;
      Vector rhs(n + nc);
      rhs << -q + curv * x, -(w.transpose() * b);
      const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      if (!sol.allFinite()) break;

      x = sol.head(n);
      const SymMatrix z = SymMatrix::FromAverage(smat(-(w * sol.tail(nc)), m).mat());
      zmat = z.mat();
      if (auto out = CheckKkt(a, b, p, q, x, z, sigma, cfg)) return out;
    }
  }
  return std::nullopt;
}

// Largest α ≤ 1 keeping X + α·dX positive definite, scaled back by 0.98.
double StepToBoundary(const Matrix& x, const Matrix& dx) {
  const Eigen::LLT<Matrix> chol(x);
  const Matrix l_inv = chol.matrixL().solve(Matrix::Identity(x.rows(), x.cols()));
  const Matrix scaled = l_inv * dx * l_inv.transpose();
  const double lo =
      Eigen::SelfAdjointEigenSolver<Matrix>((scaled + scaled.transpose()) / 2.0,
                                            Eigen::EigenvaluesOnly)
          .eigenvalues()(0);
  return lo >= 0.0 ? 1.0 : std::min(1.0, -0.98 / lo);
}

// Dense primal-dual interior-point finisher (HKM direction with Mehrotra
// centering) for the same problem. Used when the splitting iteration crawls
// on degenerate instances, where face identification is ambiguous.
std::optional<Polished> InteriorPolish(const Matrix& a, const Vector& b,
                                       const Matrix& p, const Vector& q,
                                       const Vector& x0, const SymMatrix& s0,
                                       const SymMatrix& z0, double sigma,
                                       const SolverConfig& cfg) {
  constexpr int kIterations = 80;
  const int m = s0.dim();
  const int n = static_cast<int>(a.cols());
  const Matrix eye = Matrix::Identity(m, m);
  const std::vector<Matrix> basis = BasisMatrices(a, m);
  auto sym = [](const Matrix& x) -> Matrix { return (x + x.transpose()) / 2.0; };
  auto to_vec = [](const Matrix& x) { return svec(SymMatrix::FromAverage(x)); };

  Vector x = x0;
  Matrix s = s0.mat();
  Matrix z = z0.mat();
  for (int it = 0; it < kIterations; ++it) {
    if (auto out = CheckKkt(a, b, p, q, x, SymMatrix::FromAverage(z), sigma, cfg)) {
      return out;
    }
    const Matrix rp = smat(a * x + b, m).mat() - s;
    const Vector rd = p * x + q - a.transpose() * to_vec(z);
    const double mu = s.cwiseProduct(z).sum() / m;

    const Eigen::LLT<Matrix> sfac(s);
    if (sfac.info() != Eigen::Success) return std::nullopt;
    const Matrix s_inv = sfac.solve(eye);
    Matrix schur = p;
    {
      std::vector<Matrix> g(n);
      for (int j = 0; j < n; ++j) g[j] = z * basis[j] * s_inv;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
          const double v = (basis[i].cwiseProduct(g[j]).sum() +
                            basis[j].cwiseProduct(g[i]).sum()) / 2.0;
          schur(i, j) += v;
          if (i != j) schur(j, i) += v;
        }
      }
    }
    const Eigen::LDLT<Matrix> schur_fac(schur);
    if (schur_fac.info() != Eigen::Success) return std::nullopt;

    auto direction = [&](const Matrix& target, Vector& dx, Matrix& ds, Matrix& dz) {
      const Matrix c = target - z;
      dx = schur_fac.solve(-rd + a.transpose() * to_vec(c - sym(z * rp * s_inv)));
      ds = smat(a * dx, m).mat() + rp;
      dz = c - sym(z * ds * s_inv);
    };

    Vector dx;
    Matrix ds, dz;
    direction(Matrix::Zero(m, m), dx, ds, dz);
    const double a_aff = std::min(StepToBoundary(s, ds), StepToBoundary(z, dz));
    const double mu_aff = (s + a_aff * ds).cwiseProduct(z + a_aff * dz).sum() / m;
    const double centering = std::pow(std::max(mu_aff, 0.0) / mu, 3.0);
    direction(centering * mu * s_inv, dx, ds, dz);
    const double step = std::min(StepToBoundary(s, ds), StepToBoundary(z, dz));
    if (!(step > 0.0) || !dx.allFinite()) return std::nullopt;
    x += step * dx;
    s = sym(s + step * ds);
    z = sym(z + step * dz);
  }
  return std::nullopt;
}

bool IsPureProximal(const QuadraticObjective& obj) {
  return obj.weight == 0.0 && !obj.linear_q && !obj.linear_l &&
         obj.prox_center && obj.prox_weight > 0.0;
}

}  // namespace

void SolverConfig::Validate() const {
  if (!(eps > 0.0)) throw ValidationError("solver.eps must be positive");
  if (!(tol_primal > 0.0) || !(tol_dual > 0.0)) {
    throw ValidationError("solver tolerances must be positive");
  }
  if (!(tol_primal < eps) || !(tol_dual < eps)) {
    throw ValidationError("solver tolerances must be smaller than eps");
  }
  if (max_iter <= 0) throw ValidationError("solver.max_iter must be positive");
  if (!(over_relaxation >= 1.0 && over_relaxation < 2.0)) {
    throw ValidationError("solver.over_relaxation must lie in [1, 2)");
  }
  if (!(penalty > 0.0)) throw ValidationError("solver.penalty must be positive");
  if (anderson_memory < 0) {
    throw ValidationError("solver.anderson_memory must be >= 0");
  }
  if (stall_window <= 0 || !(stall_rel_change > 0.0)) {
    throw ValidationError("solver stall detection settings must be positive");
  }
}

QuadraticObjective QuadraticObjective::Proximal(const SymMatrix& qhat,
                                                const Matrix& lhat,
                                                double weight) {
  QuadraticObjective obj;
  obj.prox_center = PolicyParams{qhat, lhat};
  obj.prox_weight = weight;
  return obj;
}

double QuadraticObjective::Evaluate(const PolicyParams& p) const {
  double f = 0.0;
  if (linear_q) f += (linear_q->mat().array() * p.Q.mat().array()).sum();
  if (linear_l) f += (linear_l->array() * p.L.array()).sum();
  if (weight != 0.0) {
    Matrix r = gain * p.Q.mat() - p.L;
    if (offset.size() != 0) r += offset;
    f += 0.5 * weight * r.squaredNorm();
  }
  if (prox_center && prox_weight != 0.0) {
    f += 0.5 * prox_weight *
         ((p.Q.mat() - prox_center->Q.mat()).squaredNorm() +
          (p.L - prox_center->L).squaredNorm());
  }
  return f;
}

SplittingSolver::SplittingSolver(LmiMap map, SolverConfig cfg)
    : map_(std::move(map)), cfg_(cfg) {
  cfg_.Validate();
  a_ = map_.operator_matrix();
  const int m = map_.block_dim();
  b_ = svec(map_.offset() - SymMatrix::Identity(m) * InternalShift(cfg_));
  ata_ = a_.transpose() * a_;
  warm_sigma_ = cfg_.penalty;
}

void SplittingSolver::ResetWarmStart() {
  warm_s_.reset();
  warm_u_.reset();
  warm_sigma_ = cfg_.penalty;
}

SplittingSolver::Quadratic SplittingSolver::Assemble(
    const QuadraticObjective& obj) const {
  const int nv = map_.num_vars();
  const int nx = map_.nx();
  const int nu = map_.nu();
  Quadratic quad{Matrix::Zero(nv, nv), Vector::Zero(nv)};
  Vector e = Vector::Zero(nv);

  if (obj.linear_q || obj.linear_l) {
    PolicyParams lin{obj.linear_q ? *obj.linear_q : SymMatrix::Zero(nx),
                     obj.linear_l ? *obj.linear_l : Matrix::Zero(nu, nx)};
    if (lin.L.rows() != nu || lin.L.cols() != nx || lin.Q.dim() != nx) {
      throw ValidationError("QuadraticObjective: linear term has wrong shape");
    }
    quad.linear += PairEmbedding(map_).transpose() * PairVector(lin);
  }
  if (obj.weight != 0.0) {
    if (obj.weight < 0.0) {
      throw ValidationError("QuadraticObjective: weight must be >= 0");
    }
    if (obj.gain.rows() != nu || obj.gain.cols() != nx) {
      throw ValidationError("QuadraticObjective: gain must be nu x nx");
    }
    // Columns of E are vec(K₀Q_j − L_j) for packed basis vectors.
    Matrix emat(nu * nx, nv);
    for (int j = 0; j < nv; ++j) {
      e(j) = 1.0;
      const PolicyParams p = map_.Unpack(e);
      const Matrix r = obj.gain * p.Q.mat() - p.L;
      emat.col(j) = Eigen::Map<const Vector>(r.data(), r.size());
      e(j) = 0.0;
    }
    quad.hessian += obj.weight * emat.transpose() * emat;
    if (obj.offset.size() != 0) {
      if (obj.offset.rows() != nu || obj.offset.cols() != nx) {
        throw ValidationError("QuadraticObjective: offset must be nu x nx");
      }
      quad.linear += obj.weight * emat.transpose() *
                     Eigen::Map<const Vector>(obj.offset.data(), nu * nx);
    }
  }
  if (obj.prox_center && obj.prox_weight != 0.0) {
    if (obj.prox_weight < 0.0) {
      throw ValidationError("QuadraticObjective: prox_weight must be >= 0");
    }
    const Matrix f = PairEmbedding(map_);
    quad.hessian += obj.prox_weight * f.transpose() * f;
    quad.linear -= obj.prox_weight * f.transpose() * PairVector(*obj.prox_center);
  }
  return quad;
}

void SplittingSolver::Factorize(const Matrix& hessian, double sigma) {
  if (sigma == factor_sigma_ && hessian.rows() == factor_hessian_copy_.rows() &&
      hessian == factor_hessian_copy_) {
    return;
  }
  Matrix kkt = hessian + sigma * ata_;
  factor_.compute(kkt);
  if (factor_.info() != Eigen::Success) {
    kkt += 1e-12 * Matrix::Identity(kkt.rows(), kkt.cols());
    factor_.compute(kkt);
    if (factor_.info() != Eigen::Success) {
      throw SolverFailure("splitting: normal-equations matrix is singular");
    }
  }
  factor_sigma_ = sigma;
  factor_hessian_copy_ = hessian;
}

Vector SplittingSolver::Solve(const Quadratic& quad, Vector x,
                              bool feasibility_only, int accept_after) {
  const int m = map_.block_dim();
  const int ns = static_cast<int>(a_.rows());
  const double alpha = cfg_.over_relaxation;
  const double shift = InternalShift(cfg_);

  double sigma = warm_sigma_;
  Vector s = warm_s_ ? *warm_s_ : svec(psd_project(smat(a_ * x + b_, m), 0.0));
  Vector u = warm_u_ ? *warm_u_ : Vector::Zero(s.size());
  if (s.size() != ns || u.size() != ns) {
    s = svec(psd_project(smat(a_ * x + b_, m), 0.0));
    u.setZero(ns);
  }

  // One splitting pass (s, u) -> (s1, u1), producing x and M(x) − shift·I.
  Vector ax(ns), s1(ns), u1(ns), v(ns);
  auto step = [&](const Vector& s_in, const Vector& u_in) {
    Factorize(quad.hessian, sigma);
    x = factor_.solve(-quad.linear - sigma * (a_.transpose() * (b_ - s_in + u_in)));
    ax.noalias() = a_ * x;
    ax += b_;
    const Vector h = alpha * ax + (1.0 - alpha) * s_in;
    v = h + u_in;
    s1 = svec(psd_project(smat(v, m), 0.0));
    u1 = v - s1;
  };

  AndersonAccelerator aa(cfg_.anderson_memory);
  Vector z(2 * ns), f(2 * ns);
  Vector fallback_s, fallback_u;
  double accelerated_from = -1.0;  // ‖f‖ before an accelerated jump

  stats_ = SolveStats{};
  double window_start_residual = -1.0;
  int last_penalty_change = 0;

  for (int it = 1; it <= cfg_.max_iter; ++it) {
    step(s, u);
    f << s1 - s, u1 - u;
    if (accelerated_from >= 0.0 && f.norm() > accelerated_from) {
      // The extrapolated point made things worse: resume from the plain step.
      s = fallback_s;
      u = fallback_u;
      aa.Reset();
      step(s, u);
      f << s1 - s, u1 - u;
    }
    accelerated_from = -1.0;

    const double r_prim = (ax - s1).norm();
    const Vector aty = sigma * (a_.transpose() * u1);
    const Vector px = quad.hessian * x;
    const double r_dual = (px + quad.linear + aty).norm();
    const double dual_scale =
        1.0 + std::max({px.norm(), quad.linear.norm(), aty.norm()});
    const double primal_scale = 1.0 + std::max(ax.norm(), s1.norm());

    stats_.iterations = it;
    stats_.primal_residual = r_prim;
    stats_.dual_residual = r_dual;
    stats_.penalty = sigma;

    const bool primal_ok = r_prim <= cfg_.tol_primal;
    const bool dual_ok = r_dual <= cfg_.tol_dual * dual_scale;
    bool done = primal_ok && (dual_ok || feasibility_only);
    if (!done && feasibility_only && it % 10 == 0 &&
        min_eigenvalue(smat(ax - b_, m) + map_.offset()) >= shift) {
      done = true;
    }
    if (done) {
      stats_.status = SolveStatus::kConverged;
      s = s1;
      u = u1;
      break;
    }
    if (!feasibility_only && (it % kPolishEvery == 0 || it == kInteriorAfter)) {
      std::optional<Polished> pol =
          FacePolish(a_, b_, quad.hessian, quad.linear, smat(v, m), x,
                     smat(-sigma * u1, m), sigma, cfg_);
      if (!pol && it == kInteriorAfter) {
        const SymMatrix zs = psd_project(smat(-sigma * u1, m), 0.0);
        const SymMatrix ss = smat(s1, m);
        const double lift = 1e-3 * (1.0 + std::max(zs.mat().norm(), ss.mat().norm()));
        const SymMatrix eye = SymMatrix::Identity(m);
        pol = InteriorPolish(a_, b_, quad.hessian, quad.linear, x,
                             SymMatrix(ss.mat() + lift * eye.mat()),
                             SymMatrix(zs.mat() + lift * eye.mat()), sigma, cfg_);
        if (!pol) {
          pol = InteriorPolish(a_, b_, quad.hessian, quad.linear, x, eye, eye,
                               sigma, cfg_);
        }
      }
      if (pol) {
        x = pol->x;
        s = pol->s;
        u = pol->u;
        stats_.primal_residual = pol->r_prim;
        stats_.dual_residual = pol->r_dual;
        stats_.status = SolveStatus::kConverged;
        break;
      }
    }
    if (accept_after > 0 && it >= accept_after && it % 10 == 0 &&
        min_eigenvalue(smat(ax - b_, m) + map_.offset()) >= 0.5 * cfg_.eps) {
      stats_.status = SolveStatus::kInexact;
      s = s1;
      u = u1;
      break;
    }

    // Infeasibility: the dual increment approaches a Farkas certificate
    // Z ⪰ 0 with 𝒜*(Z) = 0 and ⟨M₀ − shift·I, Z⟩ < 0.
    if (it % 50 == 0) {
      const SymMatrix zc = psd_project(smat(-sigma * (u1 - u), m), 0.0);
      const Vector zv = svec(zc);
      const double bz = b_.dot(zv);
      const double znorm = zv.norm();
      if (znorm > 0.0 && bz < -1e-9 * znorm &&
          (a_.transpose() * zv).norm() <= 1e-6 * std::abs(bz)) {
        stats_.status = SolveStatus::kInfeasible;
        s = s1;
        u = u1;
        break;
      }
    }
    if (it % cfg_.stall_window == 0) {
      if (window_start_residual > 0.0 && r_prim > 10.0 * cfg_.tol_primal &&
          std::abs(r_prim - window_start_residual) <=
              cfg_.stall_rel_change * window_start_residual) {
        stats_.status = SolveStatus::kInfeasible;
        s = s1;
        u = u1;
        break;
      }
      window_start_residual = r_prim;
    }
    if (it == cfg_.max_iter) {
      stats_.status = SolveStatus::kMaxIter;
      s = s1;
      u = u1;
      break;
    }

    if (cfg_.adaptive_penalty && it - last_penalty_change >= 20) {
      const double rp = r_prim / primal_scale;
      const double rd = r_dual / dual_scale;
      double factor = 1.0;
      if (rp > 10.0 * rd && sigma < 1e8) factor = 2.0;
      if (rd > 10.0 * rp && sigma > 1e-8) factor = 0.5;
      if (factor != 1.0) {
        sigma *= factor;
        u1 /= factor;  // keeps the unscaled dual σ·U fixed
        last_penalty_change = it;
        aa.Reset();
        s = s1;
        u = u1;
        continue;
      }
    }

    z << s, u;
    const std::optional<Vector> next = aa.Extrapolate(z, f);
    if (next) {
      fallback_s = s1;
      fallback_u = u1;
      accelerated_from = f.norm();
      s = next->head(ns);
      u = next->tail(ns);
    } else {
      s = s1;
      u = u1;
    }
  }

  warm_s_ = s;
  warm_u_ = u;
  warm_sigma_ = sigma;
  return x;
}

PolicyParams SplittingSolver::Minimize(const QuadraticObjective& obj,
                                       const std::optional<PolicyParams>& warm) {
  return MinimizeImpl(obj, warm, 0);
}

PolicyParams SplittingSolver::MinimizeInexact(const QuadraticObjective& obj,
                                              const PolicyParams& warm,
                                              int budget) {
  if (budget <= 0) throw ValidationError("MinimizeInexact: budget must be positive");
  return MinimizeImpl(obj, warm, budget);
}

PolicyParams SplittingSolver::MinimizeImpl(
    const QuadraticObjective& obj, const std::optional<PolicyParams>& warm,
    int accept_after) {
  if (IsPureProximal(obj)) {
    const PolicyParams& c = *obj.prox_center;
    if (map_.tied()) {
      // L is pinned to KQ; only the Q part of the center is meaningful.
      const PolicyParams tied{c.Q, *map_.tied_gain() * c.Q.mat()};
      if ((tied.L - c.L).norm() == 0.0 && margin(map_, tied) >= cfg_.eps) {
        stats_ = SolveStats{SolveStatus::kEarlyExit};
        return tied;
      }
    } else if (margin(map_, c) >= cfg_.eps) {
      stats_ = SolveStats{SolveStatus::kEarlyExit};
      return c;
    }
  }

  const Quadratic quad = Assemble(obj);
  if (obj.prox_weight > 0.0 && !IsPureProximal(obj)) {
    Eigen::LLT<Matrix> llt(quad.hessian);
    if (llt.info() == Eigen::Success) {
      const PolicyParams unconstrained = map_.Unpack(llt.solve(-quad.linear));
      if (margin(map_, unconstrained) >= cfg_.eps) {
        stats_ = SolveStats{SolveStatus::kEarlyExit};
        return unconstrained;
      }
    }
  }

  Vector x0;
  if (warm) {
    x0 = map_.Pack(*warm);
    warm_s_ = svec(psd_project(smat(a_ * x0 + b_, map_.block_dim()), 0.0));
  } else if (obj.prox_center) {
    x0 = map_.Pack(*obj.prox_center);
  } else {
    x0 = map_.Pack({SymMatrix::Identity(map_.nx()),
                    Matrix::Zero(map_.nu(), map_.nx())});
  }
  const Vector x = Solve(quad, x0, /*feasibility_only=*/false, accept_after);
  const PolicyParams result = map_.Unpack(x);
  if (stats_.status == SolveStatus::kInexact) return result;

  if (stats_.status == SolveStatus::kInfeasible) {
    throw InfeasibleError("splitting: LMI constraint set appears empty");
  }
  if (stats_.status == SolveStatus::kMaxIter &&
      (stats_.primal_residual > 10.0 * cfg_.tol_primal ||
       stats_.dual_residual > 10.0 * cfg_.tol_dual *
                                  (1.0 + quad.linear.norm() +
                                   (quad.hessian * x).norm()))) {
    throw SolverFailure(
        "splitting: no convergence after " + std::to_string(stats_.iterations) +
            " iterations (primal " + std::to_string(stats_.primal_residual) +
            ", dual " + std::to_string(stats_.dual_residual) + ")",
        stats_.primal_residual, stats_.dual_residual, stats_.iterations);
  }
  if (margin(map_, result) < cfg_.eps - 10.0 * cfg_.tol_primal) {
    throw SolverFailure("splitting: solution violates the LMI margin",
                        stats_.primal_residual, stats_.dual_residual,
                        stats_.iterations);
  }
  return result;
}

PolicyParams SplittingSolver::Project(const SymMatrix& qhat,
                                      const Matrix& lhat) {
  return Minimize(QuadraticObjective::Proximal(qhat, lhat));
}

PolicyParams SplittingSolver::ProjectInexact(const SymMatrix& qhat,
                                             const Matrix& lhat,
                                             const PolicyParams& warm,
                                             int budget) {
  return MinimizeInexact(QuadraticObjective::Proximal(qhat, lhat), warm, budget);
}

PolicyParams SplittingSolver::FindFeasible() {
  const int nv = map_.num_vars();
  const Quadratic quad{Matrix::Zero(nv, nv), Vector::Zero(nv)};
  const PolicyParams init{SymMatrix::Identity(map_.nx()),
                          Matrix::Zero(map_.nu(), map_.nx())};
  const Vector x0 = map_.Pack(init);
  if (margin(map_, map_.Unpack(x0)) >= cfg_.eps) {
    stats_ = SolveStats{SolveStatus::kEarlyExit};
    return map_.Unpack(x0);
  }
  ResetWarmStart();
  const Vector x = Solve(quad, x0, /*feasibility_only=*/true);
  const PolicyParams result = map_.Unpack(x);
  const double m = margin(map_, result);
  if (stats_.status == SolveStatus::kConverged && m >= 0.5 * cfg_.eps) {
    return result;
  }
  throw InfeasibleError(
      "find_feasible: no point with margin >= eps/2 found (distance to cone " +
      std::to_string(stats_.primal_residual) + " after " +
      std::to_string(stats_.iterations) + " iterations)");
}

PolicyParams project(const LmiMap& map, const SymMatrix& qhat,
                     const Matrix& lhat, const SolverConfig& cfg) {
  SplittingSolver solver(map, cfg);
  return solver.Project(qhat, lhat);
}

PolicyParams minimize_quadratic(const LmiMap& map,
                                const QuadraticObjective& obj,
                                const std::optional<PolicyParams>& warm,
                                const SolverConfig& cfg) {
  SplittingSolver solver(map, cfg);
  return solver.Minimize(obj, warm);
}

PolicyParams find_feasible(const LmiMap& map, const SolverConfig& cfg) {
  SplittingSolver solver(map, cfg);
  return solver.FindFeasible();
}

}  // namespace robustclone
