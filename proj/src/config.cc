#include "robustclone/config.h"

#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml++/toml.hpp>

#include "robustclone/errors.h"
#include "robustclone/io.h"

namespace robustclone {

namespace {

std::string Where(const std::string& table, const std::string& key) {
  return "config [" + table + "] " + key;
}

double GetReal(const toml::node& n, const std::string& where) {
  if (auto v = n.value_exact<double>()) return *v;
  if (auto v = n.value_exact<int64_t>()) return static_cast<double>(*v);
  throw ValidationError(where + " must be a number");
}

int64_t GetInt(const toml::node& n, const std::string& where) {
  if (auto v = n.value_exact<int64_t>()) return *v;
  throw ValidationError(where + " must be an integer");
}

int GetInt32(const toml::node& n, const std::string& where) {
  const int64_t v = GetInt(n, where);
  if (v < INT32_MIN || v > INT32_MAX) throw ValidationError(where + " is out of range");
  return static_cast<int>(v);
}

std::uint64_t GetSeed(const toml::node& n, const std::string& where) {
  const int64_t v = GetInt(n, where);
  if (v < 0) throw ValidationError(where + " must be >= 0");
  return static_cast<std::uint64_t>(v);
}

bool GetBool(const toml::node& n, const std::string& where) {
  if (auto v = n.value_exact<bool>()) return *v;
  throw ValidationError(where + " must be true or false");
}

std::string GetString(const toml::node& n, const std::string& where) {
  if (auto v = n.value_exact<std::string>()) return *v;
  throw ValidationError(where + " must be a string");
}

const toml::array& GetArray(const toml::node& n, const std::string& where) {
  if (const toml::array* a = n.as_array()) return *a;
  throw ValidationError(where + " must be an array");
}

void ApplyScenario(const toml::table& t, Scenario& sc) {
  const std::string table = "scenario";
  if (const toml::node* k = t.get("kind")) {
    sc = Scenario::Defaults(parse_scenario_kind(GetString(*k, Where(table, "kind"))));
  }
  for (const auto& [key_view, node] : t) {
    const std::string key(key_view.str());
    const std::string w = Where(table, key);
    if (key == "kind") {
      continue;
    } else if (key == "nx") {
      sc.dims.nx = GetInt32(node, w);
    } else if (key == "nu") {
      sc.dims.nu = GetInt32(node, w);
    } else if (key == "nd") {
      sc.dims.nd = GetInt32(node, w);
    } else if (key == "nz") {
      sc.dims.nz = GetInt32(node, w);
    } else if (key == "n_grid") {
      sc.n_grid.clear();
      for (const toml::node& e : GetArray(node, w)) sc.n_grid.push_back(GetInt32(e, w));
    } else if (key == "trials") {
      sc.trials = GetInt32(node, w);
    } else if (key == "noise_w") {
      sc.noise_w = GetReal(node, w);
    } else if (key == "noise_sigma") {
      sc.noise_sigma = GetReal(node, w);
    } else if (key == "methods") {
      sc.methods.clear();
      for (const toml::node& e : GetArray(node, w)) {
        sc.methods.push_back(parse_method(GetString(e, w)));
      }
    } else if (key == "gamma_offset") {
      sc.gamma_rule = GammaRule{true, GetReal(node, w)};
    } else if (key == "gamma") {
      sc.gamma_rule = GammaRule{false, GetReal(node, w)};
    } else if (key == "seed") {
      sc.seed = GetSeed(node, w);
    } else if (key == "restart_every") {
      sc.restart_every = GetInt32(node, w);
    } else if (key == "cost_trials") {
      sc.cost_trials = GetInt32(node, w);
    } else if (key == "cost_steps") {
      sc.cost_steps = GetInt32(node, w);
    } else {
      throw ValidationError("unknown key " + w);
    }
  }
  if (t.contains("gamma") && t.contains("gamma_offset")) {
    throw ValidationError("config [scenario]: set gamma or gamma_offset, not both");
  }
}

void ApplySolver(const toml::table& t, SolverConfig& s) {
  for (const auto& [key_view, node] : t) {
    const std::string key(key_view.str());
    const std::string w = Where("solver", key);
    if (key == "eps") {
      s.eps = GetReal(node, w);
    } else if (key == "tol_primal") {
      s.tol_primal = GetReal(node, w);
    } else if (key == "tol_dual") {
      s.tol_dual = GetReal(node, w);
    } else if (key == "max_iter") {
      s.max_iter = GetInt32(node, w);
    } else if (key == "over_relaxation") {
      s.over_relaxation = GetReal(node, w);
    } else if (key == "penalty") {
      s.penalty = GetReal(node, w);
    } else if (key == "adaptive_penalty") {
      s.adaptive_penalty = GetBool(node, w);
    } else if (key == "anderson_memory") {
      s.anderson_memory = GetInt32(node, w);
    } else if (key == "stall_window") {
      s.stall_window = GetInt32(node, w);
    } else if (key == "stall_rel_change") {
      s.stall_rel_change = GetReal(node, w);
    } else {
      throw ValidationError("unknown key " + w);
    }
  }
}

void ApplyFit(const toml::table& t, FitConfig& f) {
  for (const auto& [key_view, node] : t) {
    const std::string key(key_view.str());
    const std::string w = Where("fit", key);
    if (key == "lambda") {
      f.lambda = GetReal(node, w);
    } else if (key == "step_size") {
      f.step_size = GetReal(node, w);
    } else if (key == "outer_iters") {
      f.outer_iters = GetInt32(node, w);
    } else if (key == "admm_rho") {
      f.admm_rho = GetReal(node, w);
    } else if (key == "admm_prox") {
      f.admm_prox = GetReal(node, w);
    } else if (key == "admm_inner_iters") {
      f.admm_inner_iters = GetInt32(node, w);
    } else if (key == "pgd_inner_iters") {
      f.pgd_inner_iters = GetInt32(node, w);
    } else if (key == "batch") {
      if (auto s = node.value_exact<std::string>()) {
        if (*s != "full") throw ValidationError(w + " must be \"full\" or an integer");
        f.batch = 0;
      } else {
        f.batch = GetInt32(node, w);
      }
    } else if (key == "seed") {
      f.seed = GetSeed(node, w);
    } else {
      throw ValidationError("unknown key " + w);
    }
  }
}

std::string Real(double v) {
  std::string s = format_double(v);
  // TOML requires a decimal point or exponent for floats.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

HarnessConfig apply_config(const std::string& toml_text, HarnessConfig base) {
  toml::table doc;
  try {
    doc = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " at line " << e.source().begin.line;
    throw ValidationError(msg.str());
  }
  for (const auto& [key_view, node] : doc) {
    const std::string key(key_view.str());
    const toml::table* t = node.as_table();
    if (!t) throw ValidationError("config: top-level key " + key + " must be a table");
    if (key == "scenario") {
      ApplyScenario(*t, base.scenario);
    } else if (key == "solver") {
      ApplySolver(*t, base.solver);
    } else if (key == "fit") {
      ApplyFit(*t, base.fit);
    } else {
      throw ValidationError("config: unknown table [" + key + "]");
    }
  }
  base.scenario.Validate();
  base.solver.Validate();
  base.fit.Validate();
  return base;
}

std::string config_to_toml(const HarnessConfig& cfg) {
  const Scenario& sc = cfg.scenario;
  std::ostringstream o;
  o << "[scenario]\n"
    << "kind = \"" << to_string(sc.kind) << "\"\n"
    << "nx = " << sc.dims.nx << "\nnu = " << sc.dims.nu << "\nnd = " << sc.dims.nd
    << "\nnz = " << sc.dims.nz << "\nn_grid = [";
  for (size_t i = 0; i < sc.n_grid.size(); ++i) o << (i ? ", " : "") << sc.n_grid[i];
  o << "]\ntrials = " << sc.trials << "\nnoise_w = " << Real(sc.noise_w)
    << "\nnoise_sigma = " << Real(sc.noise_sigma) << "\nmethods = [";
  for (size_t i = 0; i < sc.methods.size(); ++i) {
    o << (i ? ", " : "") << "\"" << to_string(sc.methods[i]) << "\"";
  }
  o << "]\n"
    << (sc.gamma_rule.relative ? "gamma_offset = " : "gamma = ")
    << Real(sc.gamma_rule.value) << "\nseed = " << sc.seed
    << "\nrestart_every = " << sc.restart_every
    << "\ncost_trials = " << sc.cost_trials << "\ncost_steps = " << sc.cost_steps
    << "\n\n";

  const SolverConfig& s = cfg.solver;
  o << "[solver]\neps = " << Real(s.eps) << "\ntol_primal = " << Real(s.tol_primal)
    << "\ntol_dual = " << Real(s.tol_dual) << "\nmax_iter = " << s.max_iter
    << "\nover_relaxation = " << Real(s.over_relaxation)
    << "\npenalty = " << Real(s.penalty)
    << "\nadaptive_penalty = " << (s.adaptive_penalty ? "true" : "false")
    << "\nanderson_memory = " << s.anderson_memory
    << "\nstall_window = " << s.stall_window
    << "\nstall_rel_change = " << Real(s.stall_rel_change) << "\n\n";

  const FitConfig& f = cfg.fit;
  o << "[fit]\n";
  if (f.lambda) o << "lambda = " << Real(*f.lambda) << "\n";
  o << "step_size = " << Real(f.step_size) << "\nouter_iters = " << f.outer_iters
    << "\nadmm_rho = " << Real(f.admm_rho) << "\nadmm_prox = " << Real(f.admm_prox)
    << "\nadmm_inner_iters = " << f.admm_inner_iters
    << "\npgd_inner_iters = " << f.pgd_inner_iters << "\nbatch = ";
  if (f.batch == 0) {
    o << "\"full\"";
  } else {
    o << f.batch;
  }
  o << "\nseed = " << f.seed << "\n";
  return o.str();
}

}  // namespace robustclone
