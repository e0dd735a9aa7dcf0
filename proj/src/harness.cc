#include "robustclone/harness.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "robustclone/errors.h"
#include "robustclone/io.h"

namespace robustclone {

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kMaxSystemDraws = 1000;

std::string Sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  }
  return s;
}

std::string Opt(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::optional<double> ParseOpt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}

std::vector<std::string> SplitFields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool SameValue(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
}

struct Expert {
  Matrix K;
  std::optional<double> gamma_star;
};

Expert MakeExpert(const Scenario& sc, const GeneratedSystem& gs, Rng& rng,
                  const SolverConfig& scfg) {
  switch (sc.kind) {
    case ScenarioKind::kAggressive:
      return {expert_aggressive(gs.sys, rng, scfg), std::nullopt};
    case ScenarioKind::kLqr:
      return {expert_lqr(gs.sys, SymMatrix::Identity(gs.sys.nx()),
                         SymMatrix::Identity(gs.sys.nu())),
              std::nullopt};
    case ScenarioKind::kHinf: {
      const HinfSynthesis h = synth_hinf(gs.sys, *gs.channel, 1e-3, scfg);
      return {h.K, h.gamma_star};
    }
  }
  throw ValidationError("unknown scenario kind");
}

struct CellContext {
  const Scenario& sc;
  const SweepOptions& opts;
  const GeneratedSystem& gs;
  const Expert& expert;
  std::optional<double> gamma;
  NoiseModel eval_noise;
  std::optional<double> expert_norm;  // hinf_norm_lmi(K*) for hinf scenarios
};

// Fits one method. Returns the gain, or nullopt with `fail` set.
std::optional<Matrix> FitMethod(const CellContext& ctx, Method m,
                                const Dataset& data, std::uint64_t seed,
                                std::string& fail) {
  FitConfig fc = ctx.opts.fit;
  fc.seed = seed;
  const LinearSystem& sys = ctx.gs.sys;
  try {
    switch (m) {
      case Method::kPf:
        return fit_unconstrained(data, fc.ResolveLambda(data));
      case Method::kPgdStability:
      case Method::kAdmmStability:
      case Method::kPgdHinf:
      case Method::kAdmmHinf: {
        const bool hinf = m == Method::kPgdHinf || m == Method::kAdmmHinf;
        const LmiMap map = hinf ? LmiMap::Hinf(sys, *ctx.gs.channel, *ctx.gamma)
                                : LmiMap::Stability(sys);
        const bool pgd = m == Method::kPgdStability || m == Method::kPgdHinf;
        const FitReport r = pgd ? fit_pgd(data, map, fc, ctx.opts.solver)
                                : fit_admm(data, map, fc, ctx.opts.solver);
        if (!r.valid) fail = r.failure;
        if (!r.params) return std::nullopt;
        return r.K;
      }
    }
  } catch (const std::exception& e) {
    fail = e.what();
  }
  return std::nullopt;
}

SweepRow RunCell(const CellContext& ctx, int system_id, int n, Method m,
                 const Dataset& data) {
  const auto start = Clock::now();
  SweepRow row;
  row.scenario = to_string(ctx.sc.kind);
  row.system_id = system_id;
  row.n = n;
  row.method = to_string(m);
  row.seed = DeriveSeed(ctx.sc.seed, {static_cast<std::uint64_t>(system_id),
                                      static_cast<std::uint64_t>(n),
                                      HashTag(row.method)});
  row.gamma = ctx.gamma;

  std::string fail;
  const std::optional<Matrix> k = FitMethod(ctx, m, data, row.seed, fail);
  if (k) {
    const LinearSystem& sys = ctx.gs.sys;
    try {
      const double rho = spectral_radius(sys.A + sys.B * *k);
      row.stable = rho < 1.0;
      row.margin = 1.0 - rho;
      if (row.stable && ctx.gs.channel) {
        row.hinf_norm = hinf_norm_sweep(sys, *ctx.gs.channel, *k);
      }
      if (row.stable) {
        double cost = 0.0;
        switch (ctx.sc.kind) {
          case ScenarioKind::kAggressive:
            cost = cost_traj(sys, *k, ctx.expert.K, ctx.eval_noise,
                             ctx.sc.cost_trials, ctx.sc.cost_steps)
                       .value;
            break;
          case ScenarioKind::kLqr:
            cost = cost_lqr(sys, *k, ctx.expert.K,
                            SymMatrix::Identity(sys.nx()),
                            SymMatrix::Identity(sys.nu()), ctx.eval_noise,
                            ctx.sc.cost_trials, ctx.sc.cost_steps)
                       .value;
            break;
          case ScenarioKind::kHinf:
            cost = hinf_norm_lmi(sys, *ctx.gs.channel, *k, 1e-3,
                                 ctx.opts.solver) -
                   *ctx.expert_norm;
            break;
        }
        if (std::isfinite(cost)) row.cost = cost;
      }
    } catch (const std::exception& e) {
      if (fail.empty()) fail = e.what();
    }
  }
  row.fail_reason = Sanitize(fail);
  if (ctx.opts.record_wall_time) {
    row.wall_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  }
  return row;
}

std::string FormatTick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

GeneratedSystem gen_system(Rng& rng, const Dims& dims, const SolverConfig& cfg) {
  if (dims.nx <= 0 || dims.nu <= 0 || dims.nd < 0 || dims.nz < 0) {
    throw ValidationError("gen_system: dimensions must be positive");
  }
  if ((dims.nd > 0) != (dims.nz > 0)) {
    throw ValidationError("gen_system: nd and nz must both be set for a channel");
  }
  for (int draw = 0; draw < kMaxSystemDraws; ++draw) {
    GeneratedSystem gs;
    gs.sys.A = rng.UniformMatrix(dims.nx, dims.nx, -1.0, 1.0);
    gs.sys.B = rng.UniformMatrix(dims.nx, dims.nu, -1.0, 1.0);
    gs.sys.W = SymMatrix::Identity(dims.nx) * 0.25;
    try {
      find_feasible(LmiMap::Stability(gs.sys), cfg);
    } catch (const InfeasibleError&) {
      continue;
    }
    if (dims.nd > 0) {
      PerformanceChannel ch;
      ch.B1 = rng.UniformMatrix(dims.nx, dims.nd, -1.0, 1.0);
      ch.C1 = Matrix::Identity(dims.nz, dims.nx);
      ch.D12 = rng.UniformMatrix(dims.nz, dims.nu, -0.1, 0.1);
      gs.channel = ch;
    }
    return gs;
  }
  throw InfeasibleError("gen_system: no stabilizable pair in " +
                        std::to_string(kMaxSystemDraws) + " draws");
}

Dataset gen_demos(const LinearSystem& sys, const Matrix& kstar,
                  const NoiseModel& noise, int n, Rng& rng, int restart_every) {
  if (n <= 0) throw ValidationError("gen_demos: N must be positive");
  if (restart_every <= 0) {
    throw ValidationError("gen_demos: restart_every must be positive");
  }
  Dataset d{Matrix(sys.nx(), n), Matrix(sys.nu(), n)};
  int filled = 0;
  while (filled < n) {
    const Trajectory tr = simulate(sys, kstar, noise, restart_every, true, rng);
    for (size_t t = 0; t < tr.actions.size() && filled < n; ++t, ++filled) {
      d.X.col(filled) = tr.states[t];
      d.U.col(filled) = tr.actions[t];
    }
  }
  return d;
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kAggressive: return "aggressive";
    case ScenarioKind::kLqr: return "lqr";
    case ScenarioKind::kHinf: return "hinf";
  }
  return "?";
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kPf: return "pf";
    case Method::kPgdStability: return "pgd_stability";
    case Method::kAdmmStability: return "admm_stability";
    case Method::kPgdHinf: return "pgd_hinf";
    case Method::kAdmmHinf: return "admm_hinf";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(const std::string& s) {
  for (ScenarioKind k :
       {ScenarioKind::kAggressive, ScenarioKind::kLqr, ScenarioKind::kHinf}) {
    if (s == to_string(k)) return k;
  }
  throw ValidationError("unknown scenario \"" + s + "\"");
}

Method parse_method(const std::string& s) {
  for (Method m : {Method::kPf, Method::kPgdStability, Method::kAdmmStability,
                   Method::kPgdHinf, Method::kAdmmHinf}) {
    if (s == to_string(m)) return m;
  }
  throw ValidationError("unknown method \"" + s + "\"");
}

Scenario Scenario::Defaults(ScenarioKind kind) {
  Scenario sc;
  sc.kind = kind;
  switch (kind) {
    case ScenarioKind::kAggressive:
      for (int n = 5; n <= 50; n += 5) sc.n_grid.push_back(n);
      sc.methods = {Method::kPf, Method::kPgdStability, Method::kAdmmStability};
      sc.cost_steps = 100;
      break;
    case ScenarioKind::kLqr:
      for (int n = 2; n <= 20; n += 2) sc.n_grid.push_back(n);
      sc.methods = {Method::kPf, Method::kPgdStability, Method::kAdmmStability};
      sc.cost_steps = 1000;
      break;
    case ScenarioKind::kHinf:
      sc.dims = Dims{4, 2, 1, 4};
      for (int n = 5; n <= 50; n += 5) sc.n_grid.push_back(n);
      sc.methods = {Method::kPf, Method::kAdmmStability, Method::kPgdHinf,
                    Method::kAdmmHinf};
      break;
  }
  return sc;
}

void Scenario::Validate() const {
  if (dims.nx <= 0 || dims.nu <= 0 || dims.nd < 0 || dims.nz < 0) {
    throw ValidationError("scenario dims must be positive");
  }
  if (n_grid.empty()) throw ValidationError("scenario N grid is empty");
  for (size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] <= 0 || (i > 0 && n_grid[i] <= n_grid[i - 1])) {
      throw ValidationError("scenario N grid must be positive and strictly increasing");
    }
  }
  if (trials <= 0) throw ValidationError("scenario trials must be positive");
  if (!(noise_w >= 0.0) || !(noise_sigma >= 0.0)) {
    throw ValidationError("scenario noise levels must be >= 0");
  }
  if (methods.empty()) throw ValidationError("scenario method list is empty");
  if (restart_every <= 0 || cost_trials <= 0 || cost_steps <= 0) {
    throw ValidationError("scenario restart and cost settings must be positive");
  }
  const bool hinf = kind == ScenarioKind::kHinf;
  if (hinf && (dims.nd <= 0 || dims.nz <= 0)) {
    throw ValidationError("hinf scenario needs nd and nz");
  }
  for (Method m : methods) {
    if (!hinf && (m == Method::kPgdHinf || m == Method::kAdmmHinf)) {
      throw ValidationError("method " + to_string(m) +
                            " needs the hinf scenario");
    }
  }
  if (hinf && !gamma_rule.relative && !(gamma_rule.value > 0.0)) {
    throw ValidationError("absolute gamma must be positive");
  }
}

SweepResult run_sweep(const Scenario& sc, const SweepOptions& opts) {
  sc.Validate();
  opts.fit.Validate();
  opts.solver.Validate();

  SweepResult res;
  res.scenario = to_string(sc.kind);
  std::ofstream csv;
  if (opts.csv_path) {
    csv.open(*opts.csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write " + opts.csv_path->string());
    csv << kCsvHeader << "\n" << std::flush;
  }

  Dims dims = sc.dims;
  if (sc.kind != ScenarioKind::kHinf) dims.nd = dims.nz = 0;

  for (int sid = 0; sid < sc.trials; ++sid) {
    const auto id = static_cast<std::uint64_t>(sid);
    Rng sys_rng(DeriveSeed(sc.seed, {HashTag("system"), id}));
    GeneratedSystem gs = gen_system(sys_rng, dims, opts.solver);
    gs.sys.W = SymMatrix::Identity(dims.nx) * sc.noise_w;
    const Expert expert = MakeExpert(sc, gs, sys_rng, opts.solver);

    std::optional<double> gamma;
    std::optional<double> expert_norm;
    if (sc.kind == ScenarioKind::kHinf) {
      gamma = sc.gamma_rule.relative ? *expert.gamma_star + sc.gamma_rule.value
                                     : sc.gamma_rule.value;
      expert_norm =
          hinf_norm_lmi(gs.sys, *gs.channel, expert.K, 1e-3, opts.solver);
    }
    const NoiseModel demo_noise{gs.sys.W,
                                SymMatrix::Identity(dims.nu) * sc.noise_sigma,
                                0};
    const NoiseModel eval_noise{demo_noise.W, demo_noise.Sigma,
                                DeriveSeed(sc.seed, {HashTag("eval"), id})};
    const CellContext ctx{sc, opts, gs, expert, gamma, eval_noise, expert_norm};

    for (int n : sc.n_grid) {
      Rng demo_rng(DeriveSeed(
          sc.seed, {HashTag("demos"), id, static_cast<std::uint64_t>(n)}));
      const Dataset data = gen_demos(gs.sys, expert.K, demo_noise, n, demo_rng,
                                     sc.restart_every);
      for (Method m : sc.methods) {
        SweepRow row = RunCell(ctx, sid, n, m, data);
        if (csv.is_open()) csv << format_row(row) << "\n" << std::flush;
        if (opts.on_row) opts.on_row(row);
        res.rows.push_back(std::move(row));
      }
    }
  }
  res.aggregates = compute_aggregates(res.rows);
  return res;
}

std::vector<Aggregate> compute_aggregates(const std::vector<SweepRow>& rows) {
  std::vector<std::pair<int, std::string>> order;
  std::map<std::pair<int, std::string>, std::vector<const SweepRow*>> groups;
  for (const SweepRow& r : rows) {
    const auto key = std::make_pair(r.n, r.method);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<Aggregate> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    Aggregate a;
    a.n = key.first;
    a.method = key.second;
    int stable = 0;
    double sum = 0.0;
    std::vector<double> vals;
    for (const SweepRow* r : g) {
      if (r->stable) ++stable;
      if (r->stable && r->cost && std::isfinite(*r->cost) &&
          r->fail_reason.empty()) {
        vals.push_back(*r->cost);
        sum += *r->cost;
      }
    }
    a.count = static_cast<int>(vals.size());
    a.stable_pct = 100.0 * stable / static_cast<double>(g.size());
    a.mean = a.count > 0 ? sum / a.count : std::nan("");
    if (a.count > 1) {
      double ss = 0.0;
      for (double v : vals) ss += (v - a.mean) * (v - a.mean);
      a.std = std::sqrt(ss / (a.count - 1));
    } else {
      a.std = std::nan("");
    }
    out.push_back(a);
  }
  return out;
}

std::string format_row(const SweepRow& r) {
  std::ostringstream o;
  o << r.scenario << ',' << r.system_id << ',' << r.n << ',' << r.method << ','
    << r.seed << ',' << Opt(r.cost) << ',' << (r.stable ? 1 : 0) << ','
    << Opt(r.margin) << ',' << Opt(r.hinf_norm) << ',' << Opt(r.gamma) << ','
    << Opt(r.wall_ms) << ',' << r.fail_reason;
  return o.str();
}

std::string rows_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const SweepRow& r : rows) out += format_row(r) + "\n";
  return out;
}

std::string aggregates_to_csv(const std::string& scenario,
                              const std::vector<Aggregate>& aggs) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const Aggregate& a : aggs) {
    out += scenario + "," + std::to_string(a.n) + "," + a.method + "," +
           std::to_string(a.count) + "," + format_double(a.mean) + "," +
           format_double(a.std) + "," + format_double(a.stable_pct) + "\n";
  }
  return out;
}

std::vector<SweepRow> rows_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ValidationError("sweep CSV: unexpected header");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = SplitFields(line);
    if (f.size() != 12) throw ValidationError("sweep CSV: expected 12 fields");
    SweepRow r;
    try {
      r.scenario = f[0];
      r.system_id = std::stoi(f[1]);
      r.n = std::stoi(f[2]);
      r.method = f[3];
      r.seed = std::stoull(f[4]);
      r.cost = ParseOpt(f[5]);
      r.stable = f[6] == "1";
      r.margin = ParseOpt(f[7]);
      r.hinf_norm = ParseOpt(f[8]);
      r.gamma = ParseOpt(f[9]);
      r.wall_ms = ParseOpt(f[10]);
      r.fail_reason = f[11];
    } catch (const std::logic_error& e) {
      throw ValidationError(std::string("sweep CSV: malformed row: ") + e.what());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

SweepResult load_sweep(const std::filesystem::path& dir,
                       const std::string& scenario) {
  SweepResult res;
  res.scenario = scenario;
  res.rows = rows_from_csv(read_file(dir / (scenario + ".csv")));
  res.aggregates = compute_aggregates(res.rows);

  std::istringstream in(read_file(dir / (scenario + "_summary.csv")));
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader) {
    throw ValidationError("summary CSV: unexpected header");
  }
  size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = SplitFields(line);
    if (f.size() != 7 || i >= res.aggregates.size()) {
      throw ValidationError("summary CSV: row count or shape mismatch");
    }
    const Aggregate& a = res.aggregates[i++];
    const bool same = f[0] == scenario && f[1] == std::to_string(a.n) &&
                      f[2] == a.method && f[3] == std::to_string(a.count) &&
                      SameValue(parse_double(f[4]), a.mean) &&
                      SameValue(parse_double(f[5]), a.std) &&
                      SameValue(parse_double(f[6]), a.stable_pct);
    if (!same) {
      throw ValidationError("summary CSV: aggregate for N=" + f[1] + ", " +
                            f[2] + " does not match the rows");
    }
  }
  if (i != res.aggregates.size()) {
    throw ValidationError("summary CSV: missing aggregate rows");
  }
  return res;
}

std::string render_svg(const SweepResult& res) {
  constexpr double kW = 800, kH = 460;
  constexpr double kLeft = 70, kRight = 210, kTop = 40, kBottom = 60;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};

  std::vector<std::string> methods;
  std::vector<int> ns;
  for (const Aggregate& a : res.aggregates) {
    if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) {
      methods.push_back(a.method);
    }
    if (std::find(ns.begin(), ns.end(), a.n) == ns.end()) ns.push_back(a.n);
  }
  std::sort(ns.begin(), ns.end());
  double xmin = ns.empty() ? 0 : ns.front();
  double xmax = ns.empty() ? 1 : ns.back();
  if (xmax <= xmin) xmax = xmin + 1;
  double ymin = 0.0, ymax = 0.0;
  bool any = false;
  for (const Aggregate& a : res.aggregates) {
    if (a.count == 0) continue;
    const double s = std::isnan(a.std) ? 0.0 : a.std;
    if (!any) {
      ymin = a.mean - s;
      ymax = a.mean + s;
      any = true;
    }
    ymin = std::min(ymin, a.mean - s);
    ymax = std::max(ymax, a.mean + s);
  }
  ymin = std::min(ymin, 0.0);
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double pad = 0.05 * (ymax - ymin);
  ymax += pad;
  if (ymin < 0.0) ymin -= pad;

  auto px = [&](double n) { return kLeft + (n - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) { return kTop + (ymax - v) / (ymax - ymin) * ph; };
  auto pp = [&](double pct) { return kTop + (100.0 - pct) / 100.0 * ph; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
    << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << kW << "\" height=\"" << kH
    << "\" fill=\"white\"/>\n"
    << "<text x=\"" << Fixed(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" "
    << "font-size=\"15\">" << res.scenario << "</text>\n";

  // Axes and ticks.
  o << "<g stroke=\"black\" fill=\"none\">\n"
    << "<rect x=\"" << Fixed(kLeft) << "\" y=\"" << Fixed(kTop) << "\" width=\""
    << Fixed(pw) << "\" height=\"" << Fixed(ph) << "\"/>\n</g>\n";
  for (int n : ns) {
    o << "<line x1=\"" << Fixed(px(n)) << "\" y1=\"" << Fixed(kTop + ph)
      << "\" x2=\"" << Fixed(px(n)) << "\" y2=\"" << Fixed(kTop + ph + 5)
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << Fixed(px(n)) << "\" y=\"" << Fixed(kTop + ph + 18)
      << "\" text-anchor=\"middle\">" << n << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double v = ymin + (ymax - ymin) * i / 5.0;
    const double pct = 20.0 * i;
    o << "<line x1=\"" << Fixed(kLeft - 5) << "\" y1=\"" << Fixed(py(v))
      << "\" x2=\"" << Fixed(kLeft) << "\" y2=\"" << Fixed(py(v))
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << Fixed(kLeft - 8) << "\" y=\"" << Fixed(py(v) + 4)
      << "\" text-anchor=\"end\">" << FormatTick(v) << "</text>\n"
      << "<line x1=\"" << Fixed(kLeft + pw) << "\" y1=\"" << Fixed(pp(pct))
      << "\" x2=\"" << Fixed(kLeft + pw + 5) << "\" y2=\"" << Fixed(pp(pct))
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << Fixed(kLeft + pw + 8) << "\" y=\"" << Fixed(pp(pct) + 4)
      << "\">" << FormatTick(pct) << "</text>\n";
  }
  o << "<text x=\"" << Fixed(kLeft + pw / 2) << "\" y=\"" << Fixed(kH - 18)
    << "\" text-anchor=\"middle\">N</text>\n"
    << "<text x=\"16\" y=\"" << Fixed(kTop + ph / 2)
    << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << Fixed(kTop + ph / 2)
    << ")\">cost</text>\n"
    << "<text x=\"" << Fixed(kLeft + pw + 42) << "\" y=\"" << Fixed(kTop + ph / 2)
    << "\" text-anchor=\"middle\" transform=\"rotate(90 " << Fixed(kLeft + pw + 42)
    << " " << Fixed(kTop + ph / 2) << ")\">stable %</text>\n";

  for (size_t mi = 0; mi < methods.size(); ++mi) {
    const std::string& m = methods[mi];
    const char* color = kColors[mi % 6];
    std::vector<const Aggregate*> pts;
    std::vector<const Aggregate*> all;
    for (const Aggregate& a : res.aggregates) {
      if (a.method != m) continue;
      all.push_back(&a);
      if (a.count > 0) pts.push_back(&a);
    }
    auto by_n = [](const Aggregate* a, const Aggregate* b) { return a->n < b->n; };
    std::sort(pts.begin(), pts.end(), by_n);
    std::sort(all.begin(), all.end(), by_n);

    if (!pts.empty()) {
      o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (const Aggregate* a : pts) {
        const double s = std::isnan(a->std) ? 0.0 : a->std;
        o << Fixed(px(a->n)) << "," << Fixed(py(a->mean + s)) << " ";
      }
      for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
        const double s = std::isnan((*it)->std) ? 0.0 : (*it)->std;
        o << Fixed(px((*it)->n)) << "," << Fixed(py((*it)->mean - s)) << " ";
      }
      o << "\"/>\n<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
      for (const Aggregate* a : pts) {
        o << Fixed(px(a->n)) << "," << Fixed(py(a->mean)) << " ";
      }
      o << "\"/>\n";
      for (const Aggregate* a : pts) {
        o << "<circle cx=\"" << Fixed(px(a->n)) << "\" cy=\"" << Fixed(py(a->mean))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      }
    }
    if (!all.empty()) {
      o << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\" points=\"";
      for (const Aggregate* a : all) {
        o << Fixed(px(a->n)) << "," << Fixed(pp(a->stable_pct)) << " ";
      }
      o << "\"/>\n";
    }

    const double ly = kTop + 10 + 36.0 * mi;
    const double lx = kLeft + pw + 62;
    o << "<line x1=\"" << Fixed(lx) << "\" y1=\"" << Fixed(ly) << "\" x2=\""
      << Fixed(lx + 22) << "\" y2=\"" << Fixed(ly) << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << Fixed(lx + 28) << "\" y=\"" << Fixed(ly + 4) << "\">" << m
      << "</text>\n"
      << "<line x1=\"" << Fixed(lx) << "\" y1=\"" << Fixed(ly + 14) << "\" x2=\""
      << Fixed(lx + 22) << "\" y2=\"" << Fixed(ly + 14) << "\" stroke=\"" << color
      << "\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n"
      << "<text x=\"" << Fixed(lx + 28) << "\" y=\"" << Fixed(ly + 18)
      << "\" font-size=\"10\">stable %</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void emit_plots(const SweepResult& res, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / (res.scenario + ".csv"), rows_to_csv(res.rows));
  write_file(out_dir / (res.scenario + "_summary.csv"),
             aggregates_to_csv(res.scenario, res.aggregates));
  write_file(out_dir / (res.scenario + ".svg"), render_svg(res));
}

}  // namespace robustclone
