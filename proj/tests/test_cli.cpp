#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "nlbranch/cli/config.hpp"
#include "nlbranch/cli/report.hpp"
#include "nlbranch/selftest.hpp"

using namespace nlbranch;
using namespace nlbranch::cli;

namespace {

const std::string kDir = NLBRANCH_CONFIG_DIR;

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST(Coefficients, Literals) {
  EXPECT_EQ(resolve_coefficient("2.5", 1.5, std::nullopt, "b"), 2.5);
  EXPECT_EQ(resolve_coefficient(" 1e-3 ", 1.5, std::nullopt, "b"), 1e-3);
}

TEST(Coefficients, GammaForms) {
  EXPECT_EQ(resolve_coefficient("gamma(alpha)", 1.5, std::nullopt, "b"), nlbranch::gamma(1.5));
  EXPECT_EQ(resolve_coefficient("gamma( alpha )", 1.3, std::nullopt, "b"), nlbranch::gamma(1.3));
  EXPECT_EQ(resolve_coefficient("b0/gamma(alpha)", 1.7, 3.0, "b"), 3.0 / nlbranch::gamma(1.7));
}

TEST(Coefficients, RejectsOtherExpressions) {
  EXPECT_THROW(resolve_coefficient("2*gamma(alpha)", 1.5, std::nullopt, "b"), ConfigError);
  EXPECT_THROW(resolve_coefficient("gamma(1.5)", 1.5, std::nullopt, "b"), ConfigError);
  EXPECT_THROW(resolve_coefficient("1.5x", 1.5, std::nullopt, "b"), ConfigError);
  EXPECT_THROW(resolve_coefficient("b0/gamma(alpha)", 1.5, std::nullopt, "b"), ConfigError);
}

TEST(Config, SymbolicCriticalityIsExact) {
  const RunConfig cfg = load_config(kDir + "/critical_jump_b2_symbolic.yaml");
  const ValidatedModel m = validated_model(cfg);
  EXPECT_TRUE(critical_deficit(m).is_critical);
  EXPECT_EQ(cfg.model.a2.power_law().b, 3.0 / nlbranch::gamma(1.7));
}

TEST(Config, ParsesEverySection) {
  const RunConfig cfg = parse_config(R"(
model:
  alpha: 1.4
  support_cut: 2
  b0: 2
  r0: 1
  nu:
    - {z: 3, weight: 0.5}
sim:
  dt: 0.01
  eps_relative: false
  adaptive: true
  max_steps: 1000
mc: {n_paths: 500, seed: 9, threads: 2}
criteria: {rho: 2, rho_scan: [1, 3], quad_tol: 1.0e-9}
output: {path: out.json, format: json}
query: {x0: 5, a: 1, t: 2}
)");
  EXPECT_EQ(cfg.model.mu.alpha, 1.4);
  EXPECT_EQ(cfg.model.mu.support_cut, 2.0);
  ASSERT_EQ(cfg.model.nu.atoms.size(), 1u);
  EXPECT_EQ(cfg.model.nu.atoms[0].z, 3.0);
  EXPECT_EQ(cfg.sim.dt, 0.01);
  EXPECT_FALSE(cfg.sim.eps_relative);
  EXPECT_TRUE(cfg.sim.adaptive);
  EXPECT_EQ(cfg.sim.max_steps, 1000u);
  EXPECT_EQ(cfg.mc.n_paths, 500u);
  EXPECT_EQ(cfg.mc.seed, 9u);
  EXPECT_EQ(cfg.mc.threads, 2);
  EXPECT_EQ(cfg.criteria.rho, 2.0);
  EXPECT_EQ(cfg.criteria.rho_scan, (std::vector<double>{1, 3}));
  EXPECT_EQ(cfg.output.path, "out.json");
  EXPECT_EQ(cfg.query.t, 2.0);
}

TEST(Config, TablesBecomeTabulatedRates) {
  const RunConfig cfg = load_config(kDir + "/tabulated_mixed.yaml");
  ASSERT_FALSE(cfg.model.a1.is_power_law());
  EXPECT_EQ(cfg.model.a1.table().knots.size(), 4u);
  EXPECT_EQ(cfg.model.a1(1e3), 4e6);
}

TEST(Config, ErrorsCarryLineAndField) {
  const std::string bad_number = "model:\n  alpha: 1.5\n  b0: 1\n  r0: oops\n";
  EXPECT_EQ(error_line(bad_number), 4);
  EXPECT_EQ(error_field(bad_number), "model.r0");

  const std::string unknown = "model:\n  alpha: 1.5\nsim:\n  dt: 0.1\n  dtt: 0.2\n";
  EXPECT_EQ(error_line(unknown), 5);
  EXPECT_EQ(error_field(unknown), "sim.dtt");

  const std::string bad_expr = "model:\n  alpha: 1.5\n  b0: gamma(beta)\n";
  EXPECT_EQ(error_line(bad_expr), 3);

  EXPECT_EQ(error_field("sim:\n  dt: 0.1\n"), "model");
  EXPECT_EQ(error_field("model:\n  alpha: 1.5\nsim:\n  dt: -1\n"), "sim");
  EXPECT_GT(error_line("model: [1, 2\n"), 0);
  EXPECT_EQ(error_field("model:\n  alpha: 1.5\noutput: {format: xml}\n"), "output.format");
}

TEST(Config, InvalidModelIsAConfigError) {
  const RunConfig cfg = parse_config("model:\n  alpha: 2.5\n  b0: 1\n  r0: 1\n");
  EXPECT_THROW(validated_model(cfg), ConfigError);
}

TEST(Config, EchoRoundTripsToTheSameModel) {
  for (const char* name : {"gbm_critical.yaml", "critical_jump.yaml", "critical_jump_b2_symbolic.yaml",
                           "tabulated_mixed.yaml", "atoms_cut.yaml", "critical_diffusion_r1_3.yaml"}) {
    const RunConfig cfg = load_config(kDir + "/" + name);
    const RunConfig again = parse_config(config_json(cfg).dump());
    EXPECT_EQ(validated_model(again), validated_model(cfg)) << name;
    EXPECT_EQ(config_json(again), config_json(cfg)) << name;
  }
}

TEST(Config, EchoRoundTripsAwkwardDoubles) {
  RunConfig cfg;
  cfg.model = power_law_model(1.0 + 1.0 / 3.0, 0.1 + 0.2, 1.0, 2.0 / 3.0, 1e-300, std::nextafter(1.0, 2.0), 1.3);
  const RunConfig again = parse_config(config_json(cfg).dump());
  EXPECT_EQ(again.model, cfg.model);
}

TEST(Grid, ParsesRowsAndExpressions) {
  const auto grid = parse_grid_csv(
      "r0,r1,r2,alpha,b0,b1,b2,x0,a,t\n"
      "# comment\n"
      "1,0,1.5,1.5,gamma(alpha),0,1,10,1,0.5\n"
      "1,0,1.7,1.7,3,0,b0/gamma(alpha),10,1,0.5\n");
  ASSERT_EQ(grid.size(), 2u);
  EXPECT_EQ(grid[0].b0, nlbranch::gamma(1.5));
  EXPECT_EQ(grid[1].b2, 3.0 / nlbranch::gamma(1.7));
  EXPECT_EQ(grid[1].t, 0.5);
}

TEST(Grid, RejectsBadHeaderAndShortRows) {
  EXPECT_THROW(parse_grid_csv("r0,r1\n1,2\n"), ConfigError);
  try {
    parse_grid_csv("r0,r1,r2,alpha,b0,b1,b2,x0,a,t\n1,2,0,1.5,1,2,0,10,1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(parse_grid_csv(""), ConfigError);
}

TEST(Grid, BadAlphaWithExpressionLeavesAFlaggedRow) {
  const auto grid = parse_grid_csv("r0,r1,r2,alpha,b0,b1,b2,x0,a,t\n1,0,1.5,2.5,gamma(alpha),0,1,10,1,0.5\n");
  SweepOptions opts;
  opts.n_paths = 100;
  const auto rows = sweep(grid, opts, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].valid());
}

TEST(Report, HasTheRequiredFields) {
  const RunConfig cfg = load_config(kDir + "/critical_diffusion_r1_2.yaml");
  const json r = make_report("classify", config_json(cfg), to_json(classify(validated_model(cfg), cfg.criteria)), 0.5);
  for (const char* key : {"command", "config", "results", "versions", "wall_clock_seconds"}) {
    EXPECT_TRUE(r.contains(key)) << key;
  }
  EXPECT_EQ(r["results"]["infinity_behavior"], "stays_infinite");
  EXPECT_EQ(r["config"]["model"]["b1"], 2.0);
}

TEST(Report, PathCsvIsFullPrecision) {
  const std::vector<PathState> path = {{0.0, 0.1, false, false}, {1e-3, 1.0 / 3.0, false, false}};
  EXPECT_EQ(path_csv(path), "t,x\n0,0.1\n0.001,0.3333333333333333\n");
}

TEST(Selftest, FreshBuildPasses) {
  const auto checks = run_selftest();
  ASSERT_EQ(checks.size(), 4u);
  for (const auto& c : checks) EXPECT_TRUE(c.passed) << c.name << " " << c.detail;
}

TEST(Selftest, PerturbedStableConstantFailsTheIdentity) {
  SelftestOptions opts;
  opts.c_alpha_scale = 1.01;
  const auto checks = run_selftest(opts);
  EXPECT_FALSE(checks[0].passed);
  EXPECT_EQ(checks[0].name, "stable_identity");
  EXPECT_FALSE(all_passed(checks));
}
