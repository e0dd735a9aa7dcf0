#pragma once

#include <string>

#include "robustclone/harness.h"

namespace robustclone {

struct HarnessConfig {
  Scenario scenario = Scenario::Defaults(ScenarioKind::kAggressive);
  SolverConfig solver;
  FitConfig fit;
};

/// Overrides fields of `base` from the [scenario], [solver] and [fit] tables
/// of a TOML document. Unknown tables or keys, and values of the wrong type,
/// raise ValidationError.
///
///   [scenario]  kind, nx, nu, nd, nz, n_grid, trials, noise_w, noise_sigma,
///               methods, gamma_offset | gamma, seed, restart_every,
///               cost_trials, cost_steps
///   [solver]    eps, tol_primal, tol_dual, max_iter, over_relaxation,
///               penalty, adaptive_penalty, anderson_memory, stall_window,
///               stall_rel_change
///   [fit]       lambda, step_size, outer_iters, admm_rho, admm_prox,
///               admm_inner_iters, pgd_inner_iters, batch ("full" or int),
///               seed
///
/// Setting scenario.kind resets the scenario to that kind's defaults before
/// the remaining keys apply.
HarnessConfig apply_config(const std::string& toml_text, HarnessConfig base);

/// Effective configuration as a TOML document accepted by apply_config.
std::string config_to_toml(const HarnessConfig& cfg);

}  // namespace robustclone
