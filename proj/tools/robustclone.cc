#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "robustclone/config.h"
#include "robustclone/errors.h"
#include "robustclone/harness.h"
#include "robustclone/io.h"

namespace rc = robustclone;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;
constexpr int kExitCertificate = 3;

struct GenSystemArgs {
  int nx = 4;
  int nu = 2;
  bool channel = false;
  int nd = 1;
  int nz = 4;
  std::uint64_t seed = 0;
  std::string out;
};

struct GenDemosArgs {
  std::string system;
  std::string expert = "aggressive";
  int n = 50;
  std::uint64_t seed = 0;
  double sigma = 0.25;
  int restart_every = 10;
  std::string out;
  std::string expert_out;
};

struct FitArgs {
  std::string system;
  std::string demos;
  std::string method = "pgd";
  std::string constraint = "stability";
  std::optional<double> gamma;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct CheckArgs {
  std::string system;
  std::string policy;
  std::optional<double> gamma;
};

struct SweepArgs {
  std::string scenario = "aggressive";
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  bool wall_time = false;
  std::string out;
};

rc::HarnessConfig LoadConfig(const std::string& path, rc::HarnessConfig base,
                             std::string* text_out = nullptr) {
  if (path.empty()) return base;
  const std::string text = rc::read_file(path);
  if (text_out) *text_out = text;
  return rc::apply_config(text, base);
}

int GenSystem(const GenSystemArgs& a) {
  rc::Rng rng(rc::DeriveSeed(a.seed, {rc::HashTag("gen-system")}));
  rc::Dims dims{a.nx, a.nu, a.channel ? a.nd : 0, a.channel ? a.nz : 0};
  const rc::GeneratedSystem gs = rc::gen_system(rng, dims);
  rc::write_file(a.out, rc::system_to_json({gs.sys, gs.channel}));
  return kExitOk;
}

int GenDemos(const GenDemosArgs& a) {
  const rc::SystemFile f = rc::system_from_json(rc::read_file(a.system));
  rc::Rng expert_rng(rc::DeriveSeed(a.seed, {rc::HashTag("expert")}));
  rc::Matrix k;
  if (a.expert == "aggressive") {
    k = rc::expert_aggressive(f.sys, expert_rng);
  } else if (a.expert == "lqr") {
    k = rc::expert_lqr(f.sys, rc::SymMatrix::Identity(f.sys.nx()),
                       rc::SymMatrix::Identity(f.sys.nu()));
  } else if (a.expert == "hinf") {
    if (!f.channel) throw rc::ValidationError("hinf expert needs a channel in the system file");
    k = rc::synth_hinf(f.sys, *f.channel).K;
  } else if (a.expert.rfind("file:", 0) == 0) {
    k = rc::gain_from_json(rc::read_file(a.expert.substr(5)));
    if (k.rows() != f.sys.nu() || k.cols() != f.sys.nx()) {
      throw rc::ValidationError("expert gain has the wrong shape");
    }
  } else {
    throw rc::ValidationError("unknown expert \"" + a.expert + "\"");
  }
  const rc::NoiseModel noise{f.sys.W, rc::SymMatrix::Identity(f.sys.nu()) * a.sigma, 0};
  rc::Rng demo_rng(rc::DeriveSeed(a.seed, {rc::HashTag("demos")}));
  const rc::Dataset d = rc::gen_demos(f.sys, k, noise, a.n, demo_rng, a.restart_every);
  rc::write_file(a.out, rc::dataset_to_csv(d));
  if (!a.expert_out.empty()) rc::write_file(a.expert_out, rc::gain_to_json(k));
  return kExitOk;
}

int Fit(const FitArgs& a) {
  const rc::SystemFile f = rc::system_from_json(rc::read_file(a.system));
  const rc::Dataset d = rc::dataset_from_csv(rc::read_file(a.demos));
  if (d.X.rows() != f.sys.nx() || d.U.rows() != f.sys.nu()) {
    throw rc::ValidationError("demos do not match the system dimensions");
  }
  rc::HarnessConfig cfg;
  cfg = LoadConfig(a.config, cfg);
  if (a.seed) cfg.fit.seed = *a.seed;

  rc::FitReport report;
  if (a.method == "pf") {
    if (a.constraint != "none") {
      throw rc::ValidationError("method pf takes --constraint none");
    }
    report.method = "pf";
    report.K = rc::fit_unconstrained(d, cfg.fit.ResolveLambda(d));
    report.certificate = rc::certify_gain(f.sys, f.channel, report.K, a.gamma);
  } else if (a.method == "pgd" || a.method == "admm") {
    std::optional<rc::LmiMap> map;
    if (a.constraint == "stability") {
      map = rc::LmiMap::Stability(f.sys);
    } else if (a.constraint == "hinf") {
      if (!f.channel) throw rc::ValidationError("hinf constraint needs a channel");
      double gamma = 0.0;
      if (a.gamma) {
        gamma = *a.gamma;
      } else {
        gamma = rc::synth_hinf(f.sys, *f.channel, 1e-3, cfg.solver).gamma_star +
                cfg.scenario.gamma_rule.value;
      }
      map = rc::LmiMap::Hinf(f.sys, *f.channel, gamma);
    } else {
      throw rc::ValidationError("method " + a.method +
                                " takes --constraint stability or hinf");
    }
    report = a.method == "pgd" ? rc::fit_pgd(d, *map, cfg.fit, cfg.solver)
                               : rc::fit_admm(d, *map, cfg.fit, cfg.solver);
  } else {
    throw rc::ValidationError("unknown method \"" + a.method + "\"");
  }
  rc::write_file(a.out, rc::report_to_json(report));
  if (!report.valid) {
    std::cerr << "fit did not converge: " << report.failure << "\n";
    return kExitSolver;
  }
  if (!report.certificate || !report.certificate->stable ||
      (report.method != "pf" && !report.certificate->robust)) {
    std::cerr << "certificate failed for the fitted gain\n";
    return kExitCertificate;
  }
  return kExitOk;
}

int Check(const CheckArgs& a) {
  const rc::SystemFile f = rc::system_from_json(rc::read_file(a.system));
  const rc::Matrix k = rc::gain_from_json(rc::read_file(a.policy));
  if (k.rows() != f.sys.nu() || k.cols() != f.sys.nx()) {
    throw rc::ValidationError("policy gain has the wrong shape");
  }
  if (a.gamma && !f.channel) {
    throw rc::ValidationError("--gamma needs a channel in the system file");
  }
  const rc::CertificateReport c = rc::certify_gain(f.sys, f.channel, k, a.gamma);
  std::printf("spectral_radius %.12g\n", c.spectral_radius);
  std::printf("lyapunov_margin %.12g\n", c.lyapunov_margin);
  if (c.hinf_norm) {
    std::printf("hinf_norm %.12g\n", *c.hinf_norm);
    if (c.stable) {
      std::printf("hinf_norm_lmi %.12g\n", rc::hinf_norm_lmi(f.sys, *f.channel, k));
    }
  }
  std::printf("stable %s\n", c.stable ? "yes" : "no");
  if (a.gamma) std::printf("within_gamma %s\n", c.robust ? "yes" : "no");
  return c.stable && c.robust ? kExitOk : kExitCertificate;
}

int Sweep(const SweepArgs& a) {
  const rc::ScenarioKind kind = rc::parse_scenario_kind(a.scenario);
  rc::HarnessConfig cfg;
  cfg.scenario = rc::Scenario::Defaults(kind);
  std::string config_text;
  cfg = LoadConfig(a.config, cfg, &config_text);
  if (cfg.scenario.kind != kind) {
    throw rc::ValidationError("config scenario kind differs from --scenario");
  }
  if (a.seed) cfg.scenario.seed = *a.seed;
  if (a.trials) cfg.scenario.trials = *a.trials;
  cfg.scenario.Validate();

  const fs::path out(a.out);
  fs::create_directories(out);
  rc::SweepOptions opts;
  opts.fit = cfg.fit;
  opts.solver = cfg.solver;
  opts.record_wall_time = a.wall_time;
  opts.csv_path = out / (a.scenario + ".csv");
  opts.on_row = [](const rc::SweepRow& r) {
    std::cerr << r.scenario << " system " << r.system_id << " N " << r.n << " "
              << r.method << (r.stable ? " stable" : " unstable")
              << (r.fail_reason.empty() ? "" : " [" + r.fail_reason + "]") << "\n";
  };
  const auto start = std::chrono::steady_clock::now();
  const rc::SweepResult res = rc::run_sweep(cfg.scenario, opts);
  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  rc::emit_plots(res, out);

  nlohmann::json meta;
  meta["tool_version"] = ROBUSTCLONE_VERSION;
  meta["scenario"] = a.scenario;
  meta["effective_config"] = rc::config_to_toml(cfg);
  meta["config_file"] = a.config;
  meta["config_text"] = config_text;
  meta["rows"] = res.rows.size();
  meta["wall_time_ms"] = ms;
  rc::write_file(out / (a.scenario + "_meta.json"), meta.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imitation learning of linear policies under LMI constraints"};
  app.set_version_flag("--version", std::string(ROBUSTCLONE_VERSION));
  app.require_subcommand(1);

  GenSystemArgs gsa;
  auto* gs = app.add_subcommand("gen-system", "Sample a stabilizable random system");
  gs->add_option("--nx", gsa.nx, "State dimension");
  gs->add_option("--nu", gsa.nu, "Input dimension");
  gs->add_flag("--channel", gsa.channel, "Also sample a performance channel");
  gs->add_option("--nd", gsa.nd, "Disturbance dimension");
  gs->add_option("--nz", gsa.nz, "Performance output dimension");
  gs->add_option("--seed", gsa.seed, "Random seed");
  gs->add_option("-o,--output", gsa.out, "System JSON")->required();

  GenDemosArgs gda;
  auto* gd = app.add_subcommand("gen-demos", "Simulate noisy expert demonstrations");
  gd->add_option("--system", gda.system, "System JSON")->required();
  gd->add_option("--expert", gda.expert, "aggressive | lqr | hinf | file:K.json");
  gd->add_option("--n", gda.n, "Number of state/action pairs");
  gd->add_option("--seed", gda.seed, "Random seed");
  gd->add_option("--sigma", gda.sigma, "Expert action noise variance");
  gd->add_option("--restart-every", gda.restart_every, "Steps between restarts");
  gd->add_option("--expert-out", gda.expert_out, "Write the expert gain here");
  gd->add_option("-o,--output", gda.out, "Demos CSV")->required();

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a policy to demonstrations");
  fit->add_option("--system", fa.system, "System JSON")->required();
  fit->add_option("--demos", fa.demos, "Demos CSV")->required();
  fit->add_option("--method", fa.method, "pf | pgd | admm");
  fit->add_option("--constraint", fa.constraint, "none | stability | hinf");
  fit->add_option("--gamma", fa.gamma, "H∞ level (default γ* + offset)");
  fit->add_option("--config", fa.config, "TOML config");
  fit->add_option("--seed", fa.seed, "Mini-batch seed");
  fit->add_option("-o,--output", fa.out, "Report JSON")->required();

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "Certify a policy");
  check->add_option("--system", ca.system, "System JSON")->required();
  check->add_option("--policy", ca.policy, "Policy JSON")->required();
  check->add_option("--gamma", ca.gamma, "Required H∞ level");
  std::optional<std::uint64_t> check_seed;
  check->add_option("--seed", check_seed, "Unused; accepted for uniformity");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Run a scenario sweep");
  sweep->add_option("--scenario", sa.scenario, "aggressive | lqr | hinf");
  sweep->add_option("--config", sa.config, "TOML config");
  sweep->add_option("--seed", sa.seed, "Scenario seed");
  sweep->add_option("--trials", sa.trials, "Number of systems");
  sweep->add_flag("--wall-time", sa.wall_time, "Record per-cell wall time in the CSV");
  sweep->add_option("-o,--output", sa.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (app.got_subcommand(gs)) return GenSystem(gsa);
    if (app.got_subcommand(gd)) return GenDemos(gda);
    if (app.got_subcommand(fit)) return Fit(fa);
    if (app.got_subcommand(check)) return Check(ca);
    if (app.got_subcommand(sweep)) return Sweep(sa);
  } catch (const rc::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const rc::CertificateError& e) {
    std::cerr << "certificate error: " << e.what() << "\n";
    return kExitCertificate;
  } catch (const rc::SolverFailure& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const rc::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
