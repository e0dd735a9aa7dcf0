#include <filesystem>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <gtest/gtest.h>

#include "robustclone/config.h"
#include "robustclone/errors.h"
#include "robustclone/harness.h"
#include "robustclone/io.h"

namespace robustclone {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("robustclone_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Scenario TinyScenario(ScenarioKind kind) {
  Scenario sc = Scenario::Defaults(kind);
  sc.trials = 2;
  sc.n_grid = {5, 10};
  sc.cost_trials = 5;
  sc.cost_steps = 20;
  sc.seed = 17;
  return sc;
}

SweepOptions FastOptions() {
  SweepOptions o;
  o.fit.outer_iters = 40;
  return o;
}

TEST(GenSystem, DimsAndDeterminism) {
  Rng a(5), b(5);
  const GeneratedSystem x = gen_system(a, {4, 2, 0, 0});
  const GeneratedSystem y = gen_system(b, {4, 2, 0, 0});
  EXPECT_EQ(x.sys.nx(), 4);
  EXPECT_EQ(x.sys.nu(), 2);
  EXPECT_FALSE(x.channel);
  EXPECT_EQ(system_to_json({x.sys, x.channel}), system_to_json({y.sys, y.channel}));
  EXPECT_LE((x.sys.W.mat() - 0.25 * Matrix::Identity(4, 4)).norm(), 0.0);
  EXPECT_LE(x.sys.A.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_NO_THROW(find_feasible(LmiMap::Stability(x.sys)));
}

TEST(GenSystem, HinfChannel) {
  Rng rng(6);
  const GeneratedSystem g = gen_system(rng, {4, 2, 1, 4});
  ASSERT_TRUE(g.channel);
  EXPECT_EQ(g.channel->nd(), 1);
  EXPECT_EQ(g.channel->nz(), 4);
  EXPECT_EQ(g.channel->C1, Matrix::Identity(4, 4));
  EXPECT_EQ(g.channel->D12.rows(), 4);
  EXPECT_EQ(g.channel->D12.cols(), 2);
  EXPECT_LE(g.channel->D12.cwiseAbs().maxCoeff(), 0.1);
  EXPECT_THROW(gen_system(rng, {4, 2, 1, 0}), ValidationError);
}

TEST(GenDemos, ShapesAndNoiselessLabels) {
  Rng rng(7);
  const GeneratedSystem g = gen_system(rng, {4, 2, 0, 0});
  const Matrix k = expert_lqr(g.sys, SymMatrix::Identity(4), SymMatrix::Identity(2));
  const NoiseModel quiet{g.sys.W, SymMatrix::Zero(2), 0};
  const Dataset d = gen_demos(g.sys, k, quiet, 5, rng);
  EXPECT_EQ(d.N(), 5);
  EXPECT_LE((d.U - k * d.X).norm(), 1e-14);
}

TEST(GenDemos, ActionNoiseHasZeroMean) {
  Rng rng(8);
  const GeneratedSystem g = gen_system(rng, {4, 2, 0, 0});
  const Matrix k = expert_lqr(g.sys, SymMatrix::Identity(4), SymMatrix::Identity(2));
  const NoiseModel nm{g.sys.W, SymMatrix::Identity(2) * 0.25, 0};
  const int n = 10000;
  const Dataset d = gen_demos(g.sys, k, nm, n, rng);
  const Vector mean = (d.U - k * d.X).rowwise().mean();
  const double sigma = std::sqrt(0.25 / n);
  for (int i = 0; i < 2; ++i) EXPECT_LE(std::abs(mean(i)), 3 * sigma);
}

TEST(Scenario, DefaultsAndValidation) {
  const Scenario a = Scenario::Defaults(ScenarioKind::kAggressive);
  EXPECT_EQ(a.n_grid.front(), 5);
  EXPECT_EQ(a.n_grid.back(), 50);
  EXPECT_EQ(a.n_grid.size(), 10u);
  const Scenario l = Scenario::Defaults(ScenarioKind::kLqr);
  EXPECT_EQ(l.n_grid.front(), 2);
  EXPECT_EQ(l.n_grid.back(), 20);
  const Scenario h = Scenario::Defaults(ScenarioKind::kHinf);
  EXPECT_EQ(h.dims.nd, 1);
  EXPECT_EQ(h.dims.nz, 4);
  EXPECT_DOUBLE_EQ(h.gamma_rule.value, 0.1);
  Scenario bad = a;
  bad.n_grid = {10, 5};
  EXPECT_THROW(bad.Validate(), ValidationError);
  bad = a;
  bad.methods = {Method::kPgdHinf};
  EXPECT_THROW(bad.Validate(), ValidationError);
  EXPECT_THROW(parse_method("nope"), ValidationError);
  EXPECT_EQ(parse_method(to_string(Method::kAdmmHinf)), Method::kAdmmHinf);
}

TEST(Sweep, RowsAggregatesAndDeterminism) {
  const Scenario sc = TinyScenario(ScenarioKind::kAggressive);
  const fs::path dir = TempDir("sweep");
  SweepOptions o = FastOptions();
  o.csv_path = dir / "incremental.csv";
  int seen = 0;
  o.on_row = [&](const SweepRow&) { ++seen; };
  const SweepResult r1 = run_sweep(sc, o);
  EXPECT_EQ(r1.rows.size(), 2u * 2u * 3u);
  EXPECT_EQ(seen, 12);
  EXPECT_EQ(read_file(dir / "incremental.csv"), rows_to_csv(r1.rows));
  for (const SweepRow& r : r1.rows) {
    if (r.method != "pf") {
      EXPECT_TRUE(r.stable) << r.method << " " << r.fail_reason;
    }
    EXPECT_EQ(r.cost.has_value(), r.stable);
  }
  const SweepResult r2 = run_sweep(sc, FastOptions());
  EXPECT_EQ(rows_to_csv(r1.rows), rows_to_csv(r2.rows));
  EXPECT_EQ(r1.aggregates.size(), 2u * 3u);

  emit_plots(r1, dir);
  const std::string csv1 = read_file(dir / "aggressive.csv");
  const std::string svg1 = read_file(dir / "aggressive.svg");
  emit_plots(r1, dir);
  EXPECT_EQ(read_file(dir / "aggressive.csv"), csv1);
  EXPECT_EQ(read_file(dir / "aggressive.svg"), svg1);

  const SweepResult loaded = load_sweep(dir, "aggressive");
  EXPECT_EQ(rows_to_csv(loaded.rows), csv1);
}

TEST(Sweep, HinfScenarioRespectsGamma) {
  Scenario sc = TinyScenario(ScenarioKind::kHinf);
  sc.trials = 1;
  sc.n_grid = {10};
  sc.methods = {Method::kPgdHinf, Method::kAdmmHinf};
  const SweepResult r = run_sweep(sc, FastOptions());
  ASSERT_EQ(r.rows.size(), 2u);
  for (const SweepRow& row : r.rows) {
    ASSERT_TRUE(row.hinf_norm && row.gamma) << row.fail_reason;
    EXPECT_LE(*row.hinf_norm, *row.gamma);
  }
}

TEST(Aggregates, MeanStdStablePct) {
  std::vector<SweepRow> rows(4);
  for (auto& r : rows) {
    r.n = 5;
    r.method = "pgd_stability";
    r.stable = true;
  }
  rows[0].cost = 1.0;
  rows[1].cost = 3.0;
  rows[2].stable = false;
  rows[3].cost = 5.0;
  rows[3].fail_reason = "x";
  const auto a = compute_aggregates(rows);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].count, 2);
  EXPECT_DOUBLE_EQ(a[0].mean, 2.0);
  EXPECT_DOUBLE_EQ(a[0].std, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(a[0].stable_pct, 75.0);
}

TEST(Aggregates, TamperedSummaryRejected) {
  const fs::path dir = TempDir("tamper");
  SweepResult res;
  res.scenario = "lqr";
  SweepRow r;
  r.scenario = "lqr";
  r.n = 2;
  r.method = "pf";
  r.stable = true;
  r.cost = 1.5;
  res.rows = {r};
  res.aggregates = compute_aggregates(res.rows);
  emit_plots(res, dir);
  EXPECT_NO_THROW(load_sweep(dir, "lqr"));
  res.aggregates[0].mean = 1.6;
  write_file(dir / "lqr_summary.csv", aggregates_to_csv("lqr", res.aggregates));
  EXPECT_THROW(load_sweep(dir, "lqr"), ValidationError);
}

TEST(Svg, WellFormedXml) {
  SweepResult res;
  res.scenario = "aggressive";
  for (int n : {5, 10, 15}) {
    for (const char* m : {"pf", "pgd_stability"}) {
      for (int s = 0; s < 3; ++s) {
        SweepRow r;
        r.scenario = "aggressive";
        r.system_id = s;
        r.n = n;
        r.method = m;
        r.stable = s != 0 || std::string(m) != "pf";
        if (r.stable) r.cost = 1.0 / n + 0.1 * s;
        res.rows.push_back(r);
      }
    }
  }
  res.aggregates = compute_aggregates(res.rows);
  std::istringstream in(render_svg(res));
  boost::property_tree::ptree tree;
  ASSERT_NO_THROW(boost::property_tree::read_xml(in, tree));
  EXPECT_TRUE(tree.get_child_optional("svg"));
  EXPECT_EQ(tree.get<std::string>("svg.<xmlattr>.xmlns"), "http://www.w3.org/2000/svg");
}

TEST(Csv, RowRoundTrip) {
  SweepRow r;
  r.scenario = "hinf";
  r.system_id = 3;
  r.n = 25;
  r.method = "admm_hinf";
  r.seed = 0xFFFFFFFFFFFFFFFFull;
  r.cost = 0.1;
  r.stable = true;
  r.margin = 1e-7;
  r.hinf_norm = 1.2345678901234567;
  r.gamma = 1.3;
  r.fail_reason = "";
  const auto back = rows_from_csv(rows_to_csv({r}));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(format_row(back[0]), format_row(r));
  EXPECT_EQ(*back[0].hinf_norm, *r.hinf_norm);
  EXPECT_FALSE(back[0].wall_ms);
  EXPECT_THROW(rows_from_csv("bad header\n"), ValidationError);
}

TEST(Io, DoubleFormatting) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0}) {
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_TRUE(std::isnan(parse_double("nan")));
  EXPECT_THROW(parse_double("1.0x"), ValidationError);
}

TEST(Io, SystemAndGainJson) {
  Rng rng(9);
  const GeneratedSystem g = gen_system(rng, {3, 2, 1, 3});
  const SystemFile back = system_from_json(system_to_json({g.sys, g.channel}));
  EXPECT_EQ(back.sys.A, g.sys.A);
  EXPECT_EQ(back.sys.B, g.sys.B);
  EXPECT_EQ(back.sys.W.mat(), g.sys.W.mat());
  ASSERT_TRUE(back.channel);
  EXPECT_EQ(back.channel->D12, g.channel->D12);
  const Matrix k = rng.UniformMatrix(2, 3, -1, 1);
  EXPECT_EQ(gain_from_json(gain_to_json(k)), k);
  EXPECT_THROW(system_from_json(R"({"A": [[1]], "B": [[1]]})"), ValidationError);
  EXPECT_THROW(system_from_json(R"({"A": [[1, 2]], "B": [[1]], "W": [[1]]})"), ValidationError);
  EXPECT_THROW(gain_from_json("not json"), ValidationError);
}

TEST(Io, DatasetCsv) {
  Rng rng(10);
  const Dataset d{rng.UniformMatrix(3, 7, -1, 1), rng.UniformMatrix(2, 7, -1, 1)};
  const std::string text = dataset_to_csv(d);
  EXPECT_EQ(text.substr(0, text.find('\n')), "x1,x2,x3,u1,u2");
  const Dataset back = dataset_from_csv(text);
  EXPECT_EQ(back.X, d.X);
  EXPECT_EQ(back.U, d.U);
  EXPECT_THROW(dataset_from_csv("x1,u1\n1\n"), ValidationError);
}

TEST(Io, ReportJsonHasHistories) {
  FitReport r;
  r.method = "pgd";
  r.K = Matrix::Ones(1, 2);
  r.objective_history = {3.0, 2.0};
  const std::string j = report_to_json(r);
  EXPECT_NE(j.find("objective_history"), std::string::npos);
  EXPECT_NE(j.find("admm_primal_residuals"), std::string::npos);
}

TEST(Config, AppliesOverridesAndRoundTrips) {
  HarnessConfig base;
  base.scenario = Scenario::Defaults(ScenarioKind::kAggressive);
  const HarnessConfig c = apply_config(R"(
[scenario]
kind = "hinf"
trials = 3
n_grid = [5, 15]
methods = ["pgd_hinf"]
gamma_offset = 0.2

[solver]
eps = 1e-5
max_iter = 5000

[fit]
batch = "full"
lambda = 0.5
outer_iters = 10
)",
                                       base);
  EXPECT_EQ(c.scenario.kind, ScenarioKind::kHinf);
  EXPECT_EQ(c.scenario.dims.nd, 1);
  EXPECT_EQ(c.scenario.trials, 3);
  EXPECT_EQ(c.scenario.n_grid, (std::vector<int>{5, 15}));
  EXPECT_DOUBLE_EQ(c.scenario.gamma_rule.value, 0.2);
  EXPECT_DOUBLE_EQ(c.solver.eps, 1e-5);
  EXPECT_EQ(c.solver.max_iter, 5000);
  EXPECT_EQ(c.fit.batch, 0);
  EXPECT_DOUBLE_EQ(*c.fit.lambda, 0.5);
  const HarnessConfig again = apply_config(config_to_toml(c), HarnessConfig{});
  EXPECT_EQ(config_to_toml(again), config_to_toml(c));
}

TEST(Config, RejectsUnknownAndMistyped) {
  const HarnessConfig base;
  EXPECT_THROW(apply_config("[fit]\nfoo = 1\n", base), ValidationError);
  EXPECT_THROW(apply_config("[other]\nx = 1\n", base), ValidationError);
  EXPECT_THROW(apply_config("[fit]\nouter_iters = \"ten\"\n", base), ValidationError);
  EXPECT_THROW(apply_config("[fit]\nbatch = \"half\"\n", base), ValidationError);
  EXPECT_THROW(apply_config("[solver]\ntol_primal = 1.0\n", base), ValidationError);
  EXPECT_THROW(apply_config("[scenario\n", base), ValidationError);
  EXPECT_THROW(apply_config("[scenario]\ngamma = 1.0\ngamma_offset = 0.1\n", base),
               ValidationError);
}

}  // namespace
}  // namespace robustclone
