#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "robustclone/control.h"
#include "robustclone/errors.h"
#include "robustclone/fitting.h"
#include "robustclone/harness.h"
#include "robustclone/io.h"
#include "robustclone/lmi.h"
#include "robustclone/matops.h"
#include "robustclone/rng.h"
#include "robustclone/splitting.h"

namespace py = pybind11;
using namespace robustclone;

namespace {

SymMatrix ToSym(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw ValidationError(std::string(name) + " must be square");
  }
  if ((m - m.transpose()).norm() > 1e-10 * (1.0 + m.norm())) {
    throw ValidationError(std::string(name) + " must be symmetric");
  }
  return SymMatrix::FromAverage(m);
}

NoiseModel MakeNoise(const LinearSystem& sys, double sigma) {
  return {sys.W, SymMatrix::Identity(sys.nu()) * sigma, 0};
}

}  // namespace

PYBIND11_MODULE(_robustclone, m) {
  m.doc() = "Imitation learning of linear policies under LMI constraints";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<SolverFailure>(m, "SolverFailure", PyExc_RuntimeError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<CertificateError>(m, "CertificateError", PyExc_RuntimeError);

  py::class_<LinearSystem>(m, "LinearSystem")
      .def(py::init([](const Matrix& a, const Matrix& b, std::optional<Matrix> w) {
             LinearSystem s{a, b,
                            w ? ToSym(*w, "W") : SymMatrix::Identity(a.rows()) * 0.25};
             s.Validate();
             return s;
           }),
           py::arg("A"), py::arg("B"), py::arg("W") = py::none())
      .def_property_readonly("A", [](const LinearSystem& s) { return s.A; })
      .def_property_readonly("B", [](const LinearSystem& s) { return s.B; })
      .def_property_readonly("W", [](const LinearSystem& s) { return s.W.mat(); })
      .def_property_readonly("nx", &LinearSystem::nx)
      .def_property_readonly("nu", &LinearSystem::nu);

  py::class_<PerformanceChannel>(m, "PerformanceChannel")
      .def(py::init([](const Matrix& b1, const Matrix& c1, const Matrix& d12) {
             return PerformanceChannel{b1, c1, d12};
           }),
           py::arg("B1"), py::arg("C1"), py::arg("D12"))
      .def_property_readonly("B1", [](const PerformanceChannel& c) { return c.B1; })
      .def_property_readonly("C1", [](const PerformanceChannel& c) { return c.C1; })
      .def_property_readonly("D12", [](const PerformanceChannel& c) { return c.D12; });

  py::class_<PolicyParams>(m, "PolicyParams")
      .def(py::init([](const Matrix& q, const Matrix& l) {
             return PolicyParams{ToSym(q, "Q"), l};
           }),
           py::arg("Q"), py::arg("L"))
      .def_property_readonly("Q", [](const PolicyParams& p) { return p.Q.mat(); })
      .def_property_readonly("L", [](const PolicyParams& p) { return p.L; })
      .def("gain", [](const PolicyParams& p) { return extract_gain(p); });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const Matrix& x, const Matrix& u) {
             Dataset d{x, u};
             d.Validate();
             return d;
           }),
           py::arg("X"), py::arg("U"))
      .def_property_readonly("X", [](const Dataset& d) { return d.X; })
      .def_property_readonly("U", [](const Dataset& d) { return d.U; })
      .def_property_readonly("N", &Dataset::N);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("eps", &SolverConfig::eps)
      .def_readwrite("tol_primal", &SolverConfig::tol_primal)
      .def_readwrite("tol_dual", &SolverConfig::tol_dual)
      .def_readwrite("max_iter", &SolverConfig::max_iter)
      .def_readwrite("over_relaxation", &SolverConfig::over_relaxation)
      .def_readwrite("penalty", &SolverConfig::penalty)
      .def_readwrite("adaptive_penalty", &SolverConfig::adaptive_penalty)
      .def_readwrite("anderson_memory", &SolverConfig::anderson_memory);

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("lambda_", &FitConfig::lambda)
      .def_readwrite("step_size", &FitConfig::step_size)
      .def_readwrite("outer_iters", &FitConfig::outer_iters)
      .def_readwrite("admm_rho", &FitConfig::admm_rho)
      .def_readwrite("admm_prox", &FitConfig::admm_prox)
      .def_readwrite("admm_inner_iters", &FitConfig::admm_inner_iters)
      .def_readwrite("pgd_inner_iters", &FitConfig::pgd_inner_iters)
      .def_readwrite("batch", &FitConfig::batch)
      .def_readwrite("seed", &FitConfig::seed);

  py::class_<LmiMap>(m, "LmiMap")
      .def_static("stability", &LmiMap::Stability, py::arg("system"))
      .def_static("hinf", &LmiMap::Hinf, py::arg("system"), py::arg("channel"),
                  py::arg("gamma"))
      .def("with_tied_gain", &LmiMap::WithTiedGain, py::arg("K"))
      .def_property_readonly("block_dim", &LmiMap::block_dim)
      .def_property_readonly("gamma", &LmiMap::gamma)
      .def("evaluate",
           [](const LmiMap& map, const PolicyParams& p) { return map.Evaluate(p).mat(); })
      .def("margin", [](const LmiMap& map, const PolicyParams& p) { return margin(map, p); });

  py::class_<CertificateReport>(m, "CertificateReport")
      .def_property_readonly("K", [](const CertificateReport& r) { return r.K; })
      .def_readonly("spectral_radius", &CertificateReport::spectral_radius)
      .def_readonly("lyapunov_margin", &CertificateReport::lyapunov_margin)
      .def_readonly("hinf_norm", &CertificateReport::hinf_norm)
      .def_readonly("gamma", &CertificateReport::gamma)
      .def_readonly("stable", &CertificateReport::stable)
      .def_readonly("robust", &CertificateReport::robust);

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("method", &FitReport::method)
      .def_property_readonly("K", [](const FitReport& r) { return r.K; })
      .def_readonly("params", &FitReport::params)
      .def_readonly("objective_history", &FitReport::objective_history)
      .def_readonly("feasibility_margins", &FitReport::feasibility_margins)
      .def_readonly("admm_primal_residuals", &FitReport::admm_primal_residuals)
      .def_readonly("certificate", &FitReport::certificate)
      .def_readonly("valid", &FitReport::valid)
      .def_readonly("failure", &FitReport::failure)
      .def("to_json", [](const FitReport& r) { return report_to_json(r); });

  py::class_<HinfSynthesis>(m, "HinfSynthesis")
      .def_property_readonly("K", [](const HinfSynthesis& h) { return h.K; })
      .def_readonly("gamma_star", &HinfSynthesis::gamma_star)
      .def_readonly("params", &HinfSynthesis::params);

  m.def("spectral_radius", &spectral_radius, py::arg("A"));
  m.def(
      "dare",
      [](const Matrix& a, const Matrix& b, const Matrix& qc, const Matrix& rc) {
        const DareSolution d = dare(a, b, ToSym(qc, "Qc"), ToSym(rc, "Rc"));
        return py::make_tuple(d.P.mat(), d.K);
      },
      py::arg("A"), py::arg("B"), py::arg("Qc"), py::arg("Rc"));

  m.def(
      "gen_system",
      [](std::uint64_t seed, int nx, int nu, int nd, int nz) {
        Rng rng(DeriveSeed(seed, {HashTag("gen-system")}));
        GeneratedSystem g = gen_system(rng, {nx, nu, nd, nz});
        return py::make_tuple(g.sys, g.channel);
      },
      py::arg("seed"), py::arg("nx") = 4, py::arg("nu") = 2, py::arg("nd") = 0,
      py::arg("nz") = 0);
  m.def(
      "gen_demos",
      [](const LinearSystem& sys, const Matrix& k, int n, std::uint64_t seed, double sigma,
         int restart_every) {
        Rng rng(DeriveSeed(seed, {HashTag("demos")}));
        return gen_demos(sys, k, MakeNoise(sys, sigma), n, rng,
                         restart_every);
      },
      py::arg("system"), py::arg("K"), py::arg("n"), py::arg("seed"), py::arg("sigma") = 0.25,
      py::arg("restart_every") = 10);

  m.def(
      "expert_lqr",
      [](const LinearSystem& sys, std::optional<Matrix> qc, std::optional<Matrix> rc) {
        return expert_lqr(sys, qc ? ToSym(*qc, "Qc") : SymMatrix::Identity(sys.nx()),
                          rc ? ToSym(*rc, "Rc") : SymMatrix::Identity(sys.nu()));
      },
      py::arg("system"), py::arg("Qc") = py::none(), py::arg("Rc") = py::none());
  m.def(
      "expert_aggressive",
      [](const LinearSystem& sys, std::uint64_t seed) {
        Rng rng(DeriveSeed(seed, {HashTag("expert")}));
        return expert_aggressive(sys, rng);
      },
      py::arg("system"), py::arg("seed"));

  m.def("hinf_norm_sweep", &hinf_norm_sweep, py::arg("system"), py::arg("channel"),
        py::arg("K"), py::arg("grid_size") = 4096);
  m.def(
      "hinf_norm_lmi",
      [](const LinearSystem& sys, const PerformanceChannel& ch, const Matrix& k, double tol) {
        return hinf_norm_lmi(sys, ch, k, tol);
      },
      py::arg("system"), py::arg("channel"), py::arg("K"), py::arg("tol") = 1e-3);
  m.def(
      "synth_hinf",
      [](const LinearSystem& sys, const PerformanceChannel& ch, double tol) {
        return synth_hinf(sys, ch, tol);
      },
      py::arg("system"), py::arg("channel"), py::arg("tol") = 1e-3);

  m.def(
      "project",
      [](const LmiMap& map, const Matrix& q, const Matrix& l, const SolverConfig& cfg) {
        return project(map, ToSym(q, "Q"), l, cfg);
      },
      py::arg("map"), py::arg("Q"), py::arg("L"), py::arg("config") = SolverConfig{});
  m.def(
      "find_feasible",
      [](const LmiMap& map, const SolverConfig& cfg) { return find_feasible(map, cfg); },
      py::arg("map"), py::arg("config") = SolverConfig{});

  m.def("bc_objective", &bc_objective, py::arg("K"), py::arg("data"), py::arg("lambda_"));
  m.def("fit_unconstrained", &fit_unconstrained, py::arg("data"), py::arg("lambda_"));
  m.def("fit_pgd", &fit_pgd, py::arg("data"), py::arg("map"), py::arg("config") = FitConfig{},
        py::arg("solver") = SolverConfig{});
  m.def("fit_admm", &fit_admm, py::arg("data"), py::arg("map"), py::arg("config") = FitConfig{},
        py::arg("solver") = SolverConfig{});

  m.def(
      "certify_gain",
      [](const LinearSystem& sys, const Matrix& k, std::optional<PerformanceChannel> ch,
         std::optional<double> gamma) { return certify_gain(sys, ch, k, gamma); },
      py::arg("system"), py::arg("K"), py::arg("channel") = py::none(),
      py::arg("gamma") = py::none());
}
