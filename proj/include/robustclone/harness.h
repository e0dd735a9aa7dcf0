#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "robustclone/control.h"
#include "robustclone/fitting.h"
#include "robustclone/rng.h"

namespace robustclone {

struct Dims {
  int nx = 4;
  int nu = 2;
  int nd = 0;  // 0 = no performance channel
  int nz = 0;
};

struct GeneratedSystem {
  LinearSystem sys;
  std::optional<PerformanceChannel> channel;
};

/// A, B ~ U(−1, 1), redrawn until the stability LMI is feasible. W = 0.25·I.
/// With nd > 0: B1 ~ U(−1, 1), C1 = I (nz must equal nx), D12 ~ U(−0.1, 0.1).
/// Throws InfeasibleError after 1000 rejected draws.
GeneratedSystem gen_system(Rng& rng, const Dims& dims,
                           const SolverConfig& cfg = {});

/// N state/action pairs (x_t, K*x_t + e_t) from closed-loop runs under K*.
/// A fresh x₀ ~ U(−1, 1)ⁿ is drawn every `restart_every` steps.
Dataset gen_demos(const LinearSystem& sys, const Matrix& kstar,
                  const NoiseModel& noise, int n, Rng& rng,
                  int restart_every = 10);

enum class ScenarioKind { kAggressive, kLqr, kHinf };
enum class Method { kPf, kPgdStability, kAdmmStability, kPgdHinf, kAdmmHinf };

std::string to_string(ScenarioKind k);
std::string to_string(Method m);
ScenarioKind parse_scenario_kind(const std::string& s);
Method parse_method(const std::string& s);

struct GammaRule {
  bool relative = true;  // γ = γ* + value, otherwise γ = value
  double value = 0.1;
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::kAggressive;
  Dims dims;
  std::vector<int> n_grid;
  int trials = 10;
  double noise_w = 0.25;      // W = noise_w·I
  double noise_sigma = 0.25;  // Σ = noise_sigma·I
  std::vector<Method> methods;
  GammaRule gamma_rule;
  std::uint64_t seed = 0;
  int restart_every = 10;
  int cost_trials = 100;
  int cost_steps = 100;

  static Scenario Defaults(ScenarioKind kind);
  void Validate() const;
};

struct SweepRow {
  std::string scenario;
  int system_id = 0;
  int n = 0;
  std::string method;
  std::uint64_t seed = 0;
  std::optional<double> cost;
  bool stable = false;
  std::optional<double> margin;  // 1 − ρ(A + BK)
  std::optional<double> hinf_norm;
  std::optional<double> gamma;
  std::optional<double> wall_ms;
  std::string fail_reason;
};

struct Aggregate {
  int n = 0;
  std::string method;
  int count = 0;      // rows entering mean and std
  double mean = 0.0;  // nan when count == 0
  double std = 0.0;   // sample standard deviation; nan when count < 2
  double stable_pct = 0.0;
};

struct SweepResult {
  std::string scenario;
  std::vector<SweepRow> rows;
  std::vector<Aggregate> aggregates;
};

struct SweepOptions {
  FitConfig fit;
  SolverConfig solver;
  // Rows are appended (and flushed) here as they complete, when set.
  std::optional<std::filesystem::path> csv_path;
  // Wall times make output bytes run-dependent, so they are off by default.
  bool record_wall_time = false;
  std::function<void(const SweepRow&)> on_row;
};

SweepResult run_sweep(const Scenario& sc, const SweepOptions& opts);

/// Per (N, method) in first-appearance order: mean and sample std of cost
/// over stable rows with a finite cost and no failure, and the percentage of
/// stable rows.
std::vector<Aggregate> compute_aggregates(const std::vector<SweepRow>& rows);

inline constexpr const char* kCsvHeader =
    "scenario,system_id,N,method,seed,cost,stable,margin,hinf_norm,gamma,"
    "wall_ms,fail_reason";
inline constexpr const char* kSummaryHeader =
    "scenario,N,method,count,mean,std,stable_pct";

std::string format_row(const SweepRow& r);
std::string rows_to_csv(const std::vector<SweepRow>& rows);
std::string aggregates_to_csv(const std::string& scenario,
                              const std::vector<Aggregate>& aggs);
std::vector<SweepRow> rows_from_csv(const std::string& text);

/// Reads <scenario>.csv and <scenario>_summary.csv from dir and checks that
/// the stored aggregates match recomputation to 1e-12. Throws
/// ValidationError on mismatch.
SweepResult load_sweep(const std::filesystem::path& dir,
                       const std::string& scenario);

std::string render_svg(const SweepResult& res);

/// Writes <scenario>.csv, <scenario>_summary.csv and <scenario>.svg.
void emit_plots(const SweepResult& res, const std::filesystem::path& out_dir);

}  // namespace robustclone
