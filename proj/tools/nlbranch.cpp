#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "nlbranch/cli/config.hpp"
#include "nlbranch/cli/report.hpp"
#include "nlbranch/criteria.hpp"
#include "nlbranch/montecarlo.hpp"
#include "nlbranch/selftest.hpp"
#include "nlbranch/simulator.hpp"

namespace {

using nlbranch::cli::ConfigError;
using nlbranch::cli::json;

enum ExitCode { kOk = 0, kConfigError = 1, kNumericFailure = 2, kSelftestFailure = 3 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  std::string format;
  std::optional<double> x0;
  std::optional<double> a;
  std::optional<double> t;
  std::optional<std::uint64_t> n_paths;
  std::string grid;
  std::size_t max_points = 10000;
  double c_alpha_scale = 1.0;
};

class Output {
 public:
  Output(const Options& opts, const nlbranch::cli::RunConfig& cfg, const std::string& default_format)
      : path_(!opts.out.empty() ? opts.out : cfg.output.path),
        format_(!opts.format.empty() ? opts.format : !cfg.output.format.empty() ? cfg.output.format : default_format) {}

  const std::string& format() const { return format_; }

  void write(const std::string& text) const {
    if (path_.empty() || path_ == "-") {
      std::cout << text;
      return;
    }
    std::ofstream f(path_, std::ios::binary);
    if (!f) throw ConfigError("output.path", "cannot write '" + path_ + "'");
    f << text;
  }

 private:
  std::string path_;
  std::string format_;
};

nlbranch::cli::RunConfig load(const Options& opts, bool require_model = true) {
  if (opts.config.empty()) {
    if (require_model) throw ConfigError("--config", "required for this command");
    return {};
  }
  nlbranch::cli::RunConfig cfg = nlbranch::cli::load_config(opts.config, require_model);
  if (opts.seed) cfg.mc.seed = *opts.seed;
  if (opts.threads) cfg.mc.threads = *opts.threads;
  if (opts.n_paths) cfg.mc.n_paths = *opts.n_paths;
  return cfg;
}

double required(const std::optional<double>& flag, const std::optional<double>& fallback, const char* name) {
  if (flag) return *flag;
  if (fallback) return *fallback;
  throw ConfigError(std::string("query.") + name, std::string("give --") + name + " or set it in the config");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string report_text(const std::string& command, const nlbranch::cli::RunConfig& cfg, const json& results,
                        std::chrono::steady_clock::time_point start) {
  return nlbranch::cli::make_report(command, nlbranch::cli::config_json(cfg), results, seconds_since(start)).dump(2) +
         "\n";
}

int cmd_classify(const Options& opts) {
  const auto start = std::chrono::steady_clock::now();
  const nlbranch::cli::RunConfig cfg = load(opts);
  const nlbranch::ValidatedModel model = nlbranch::cli::validated_model(cfg);
  const nlbranch::BoundaryReport report = nlbranch::classify(model, cfg.criteria);
  const Output out(opts, cfg, "json");
  if (out.format() == "csv") {
    std::string text = "region,u,phi,h_rho\n";
    auto rows = [&](const char* region, const std::vector<nlbranch::GridPoint>& pts) {
      for (const auto& p : pts) {
        text += std::string(region) + ',' + nlbranch::format_double(p.u) + ',' + nlbranch::format_double(p.phi) + ',' +
                (p.h_rho ? nlbranch::format_double(*p.h_rho) : "") + '\n';
      }
    };
    rows("small_u", report.small_u);
    rows("large_u", report.large_u);
    out.write(text);
  } else {
    out.write(report_text("classify", cfg, nlbranch::cli::to_json(report), start));
  }
  return kOk;
}

int cmd_simulate(const Options& opts) {
  const auto start = std::chrono::steady_clock::now();
  const nlbranch::cli::RunConfig cfg = load(opts);
  const nlbranch::ValidatedModel model = nlbranch::cli::validated_model(cfg);
  const double x0 = required(opts.x0, cfg.query.x0, "x0");
  nlbranch::RngStream rng(cfg.mc.seed, 0);
  const auto path = nlbranch::thin_path(nlbranch::simulate_path(model, cfg.sim, x0, rng), opts.max_points);
  const Output out(opts, cfg, "csv");
  if (out.format() == "csv") {
    out.write(nlbranch::cli::path_csv(path));
  } else {
    json results = nlbranch::cli::to_json(path);
    results["x0"] = x0;
    results["seed"] = cfg.mc.seed;
    out.write(report_text("simulate", cfg, results, start));
  }
  return kOk;
}

int cmd_passage(const Options& opts) {
  const auto start = std::chrono::steady_clock::now();
  const nlbranch::cli::RunConfig cfg = load(opts);
  const nlbranch::ValidatedModel model = nlbranch::cli::validated_model(cfg);
  const double x0 = required(opts.x0, cfg.query.x0, "x0");
  const double a = required(opts.a, cfg.query.a, "a");
  const double t = required(opts.t, cfg.query.t, "t");
  const nlbranch::PassageEstimate est = nlbranch::estimate_passage_prob(
      model, cfg.sim, x0, a, t, cfg.mc.n_paths, cfg.mc.seed, nlbranch::resolve_threads(cfg.mc.threads));
  const Output out(opts, cfg, "json");
  if (out.format() == "csv") {
    using nlbranch::format_double;
    out.write("x0,a,t,p_hat,ci_low,ci_high,n_paths,crossings,capped,seed\n" + format_double(x0) + ',' +
              format_double(a) + ',' + format_double(t) + ',' + format_double(est.p_hat) + ',' +
              format_double(est.ci95_low) + ',' + format_double(est.ci95_high) + ',' + std::to_string(est.n_paths) +
              ',' + std::to_string(est.crossings) + ',' + std::to_string(est.capped) + ',' +
              std::to_string(cfg.mc.seed) + '\n');
  } else {
    json results = nlbranch::cli::to_json(est);
    results["seed"] = cfg.mc.seed;
    out.write(report_text("passage", cfg, results, start));
  }
  return kOk;
}

int cmd_sweep(const Options& opts) {
  const auto start = std::chrono::steady_clock::now();
  const nlbranch::cli::RunConfig cfg = load(opts, false);
  if (opts.grid.empty()) throw ConfigError("--grid", "required for sweep");
  const auto grid = nlbranch::cli::load_grid(opts.grid);
  nlbranch::SweepOptions sopts;
  sopts.sim = cfg.sim;
  sopts.criteria = cfg.criteria;
  sopts.n_paths = cfg.mc.n_paths;
  sopts.threads = nlbranch::resolve_threads(cfg.mc.threads);
  const auto rows = nlbranch::sweep(grid, sopts, cfg.mc.seed);
  const Output out(opts, cfg, "csv");
  if (out.format() == "csv") {
    out.write(nlbranch::sweep_csv(rows, cfg.mc.n_paths, cfg.mc.seed));
  } else {
    json arr = json::array();
    for (const auto& row : rows) arr.push_back(nlbranch::cli::to_json(row));
    json config = nlbranch::cli::config_json(cfg);
    config.erase("model");
    const json results = {{"rows", arr}, {"grid", opts.grid}, {"n_paths", cfg.mc.n_paths}, {"seed", cfg.mc.seed}};
    out.write(nlbranch::cli::make_report("sweep", config, results, seconds_since(start)).dump(2) + "\n");
  }
  return kOk;
}

int cmd_selftest(const Options& opts) {
  const auto start = std::chrono::steady_clock::now();
  nlbranch::SelftestOptions st;
  st.c_alpha_scale = opts.c_alpha_scale;
  const auto checks = nlbranch::run_selftest(st);
  const nlbranch::cli::RunConfig cfg;
  const Output out(opts, cfg, "json");
  if (out.format() == "csv") {
    std::string text = "check,passed,worst,detail\n";
    for (const auto& c : checks) {
      text += c.name + ',' + (c.passed ? "true" : "false") + ',' + nlbranch::format_double(c.worst) + ',' +
              c.detail + '\n';
    }
    out.write(text);
  } else {
    const json results = {{"checks", nlbranch::cli::to_json(checks)}, {"passed", nlbranch::all_passed(checks)}};
    out.write(nlbranch::cli::make_report("selftest", json::object(), results, seconds_since(start)).dump(2) + "\n");
  }
  for (const auto& c : checks) {
    std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : " (" + c.detail + ")") << '\n';
  }
  return nlbranch::all_passed(checks) ? kOk : kSelftestFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary behavior of nonlinear continuous-state branching processes"};
  app.set_version_flag("--version", NLBRANCH_VERSION);
  app.require_subcommand(1);
  Options opts;

  auto common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", opts.config, "YAML run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "Override mc.seed");
    sub->add_option("--threads", opts.threads, "Worker threads (fallback: NLBRANCH_THREADS, then 1)")
        ->check(CLI::Range(1, 4096));
    sub->add_option("--out", opts.out, "Output file (default: stdout)");
    sub->add_option("--format", opts.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };

  auto* classify = app.add_subcommand("classify", "Apply the boundary criteria to the configured model");
  common(classify, true);

  auto* simulate = app.add_subcommand("simulate", "Simulate one path and emit its (t, x) trace");
  common(simulate, true);
  simulate->add_option("--x0", opts.x0, "Initial state (default: query.x0)");
  simulate->add_option("--max-points", opts.max_points, "Thin the trace to at most this many points")
      ->check(CLI::Range(std::size_t{2}, std::size_t{100'000'000}));

  auto* passage = app.add_subcommand("passage", "Estimate P(X drops below a by time t)");
  common(passage, true);
  passage->add_option("--x0", opts.x0, "Initial state (default: query.x0)");
  passage->add_option("--a", opts.a, "Lower barrier (default: query.a)");
  passage->add_option("--t", opts.t, "Time horizon (default: query.t)");
  passage->add_option("--n-paths", opts.n_paths, "Override mc.n_paths");

  auto* sweep = app.add_subcommand("sweep", "Classify and estimate passage over a CSV grid of power-law models");
  common(sweep, true);
  sweep->add_option("--grid", opts.grid, "CSV grid: r0,r1,r2,alpha,b0,b1,b2,x0,a,t")->check(CLI::ExistingFile);
  sweep->add_option("--n-paths", opts.n_paths, "Override mc.n_paths");

  auto* selftest = app.add_subcommand("selftest", "Run the numerical invariant battery");
  common(selftest, false);
  selftest->add_option("--perturb-c-alpha", opts.c_alpha_scale)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*classify) return cmd_classify(opts);
    if (*simulate) return cmd_simulate(opts);
    if (*passage) return cmd_passage(opts);
    if (*sweep) return cmd_sweep(opts);
    return cmd_selftest(opts);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const YAML::Exception& e) {
    std::cerr << "error: config:" << e.mark.line + 1 << ": " << e.msg << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  }
}
