#pragma once

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlbranch/criteria.hpp"
#include "nlbranch/model.hpp"
#include "nlbranch/montecarlo.hpp"
#include "nlbranch/simulator.hpp"

namespace nlbranch::cli {

/// Malformed or invalid configuration; carries the 1-based source line when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message, int line = 0)
      : std::runtime_error(format(field, message, line)), field_(field), line_(line) {}
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& field, const std::string& message, int line) {
    std::string out = "config";
    if (line > 0) out += ":" + std::to_string(line);
    if (!field.empty()) out += ": " + field;
    return out + ": " + message;
  }
  std::string field_;
  int line_;
};

struct McConfig {
  std::uint64_t n_paths = 10000;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct OutputConfig {
  std::string path;
  /// "csv", "json", or empty to use the command's default.
  std::string format;
};

/// Default arguments for the passage and simulate commands.
struct QueryConfig {
  std::optional<double> x0;
  std::optional<double> a;
  std::optional<double> t;
};

struct RunConfig {
  ModelSpec model;
  SimConfig sim;
  McConfig mc;
  CriteriaConfig criteria;
  OutputConfig output;
  QueryConfig query;
};

namespace detail {

inline int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

inline std::string strip(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

inline double as_number(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) throw ConfigError(field, "expected a number", line_of(node));
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError(field, "expected a number, got '" + node.Scalar() + "'", line_of(node));
  }
}

inline bool as_bool(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<bool>();
  } catch (const YAML::Exception&) {
    throw ConfigError(field, "expected true or false", line_of(node));
  }
}

inline std::uint64_t as_count(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<std::uint64_t>();
  } catch (const YAML::Exception&) {
    throw ConfigError(field, "expected a nonnegative integer", line_of(node));
  }
}

inline std::vector<double> as_number_list(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) throw ConfigError(field, "expected a list of numbers", line_of(node));
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(as_number(node[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline void reject_unknown(const YAML::Node& map, const std::vector<std::string>& known, const std::string& section) {
  if (!map.IsMap()) throw ConfigError(section, "expected a mapping", line_of(map));
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(section.empty() ? key : section + "." + key, "unknown key", line_of(kv.first));
    }
  }
}

}  // namespace detail

/// Resolve a coefficient given as a number or as one of the two exact forms
/// "gamma(alpha)" and "b0/gamma(alpha)".
inline double resolve_coefficient(const std::string& text, double alpha, std::optional<double> b0,
                                  const std::string& field, int line = 0) {
  const std::string s = detail::strip(text);
  if (s == "gamma(alpha)") return gamma(alpha);
  if (s == "b0/gamma(alpha)") {
    if (!b0) throw ConfigError(field, "b0/gamma(alpha) needs a numeric b0", line);
    return *b0 / gamma(alpha);
  }
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw ConfigError(field, "expected a number, \"gamma(alpha)\" or \"b0/gamma(alpha)\", got '" + text + "'", line);
  }
  return value;
}

namespace detail {

inline RateFunction parse_table(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) throw ConfigError(field, "expected a list of [u, value] pairs", line_of(node));
  Tabulated t;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const YAML::Node& pair = node[i];
    const std::string f = field + "[" + std::to_string(i) + "]";
    if (!pair.IsSequence() || pair.size() != 2) throw ConfigError(f, "expected [u, value]", line_of(pair));
    t.knots.push_back({as_number(pair[0], f), as_number(pair[1], f)});
  }
  return t;
}

inline ModelSpec parse_model(const YAML::Node& node) {
  reject_unknown(node, {"alpha", "support_cut", "b0", "r0", "b1", "r1", "b2", "r2", "b3", "r3", "tables", "nu"}, "model");
  if (!node["alpha"]) throw ConfigError("model.alpha", "missing", line_of(node));
  ModelSpec spec;
  spec.mu.alpha = as_number(node["alpha"], "model.alpha");
  if (node["support_cut"] && !node["support_cut"].IsNull()) {
    spec.mu.support_cut = as_number(node["support_cut"], "model.support_cut");
  }
  const double alpha = spec.mu.alpha;

  auto exponent = [&](const char* key) { return node[key] ? as_number(node[key], std::string("model.") + key) : 0.0; };
  std::optional<double> b0;
  std::array<double, 4> b{};
  for (int i : {0, 1, 2, 3}) {
    const std::string key = "b" + std::to_string(i);
    const YAML::Node v = node[key];
    if (!v) continue;
    if (!v.IsScalar()) throw ConfigError("model." + key, "expected a scalar", line_of(v));
    b[i] = resolve_coefficient(v.Scalar(), alpha, b0, "model." + key, line_of(v));
    if (i == 0) b0 = b[0];
  }
  spec.a0 = RateFunction::power(b[0], exponent("r0"));
  spec.a1 = RateFunction::power(b[1], exponent("r1"));
  spec.a2 = RateFunction::power(b[2], exponent("r2"));
  spec.a3 = RateFunction::power(b[3], exponent("r3"));

  if (const YAML::Node tables = node["tables"]) {
    reject_unknown(tables, {"a0", "a1", "a2", "a3"}, "model.tables");
    RateFunction* slots[] = {&spec.a0, &spec.a1, &spec.a2, &spec.a3};
    for (int i = 0; i < 4; ++i) {
      const std::string key = "a" + std::to_string(i);
      if (tables[key]) *slots[i] = parse_table(tables[key], "model.tables." + key);
    }
  }
  if (const YAML::Node nu = node["nu"]) {
    if (!nu.IsSequence()) throw ConfigError("model.nu", "expected a list of {z, weight}", line_of(nu));
    for (std::size_t i = 0; i < nu.size(); ++i) {
      const std::string f = "model.nu[" + std::to_string(i) + "]";
      reject_unknown(nu[i], {"z", "weight"}, f);
      if (!nu[i]["z"] || !nu[i]["weight"]) throw ConfigError(f, "needs z and weight", line_of(nu[i]));
      spec.nu.atoms.push_back({as_number(nu[i]["z"], f + ".z"), as_number(nu[i]["weight"], f + ".weight")});
    }
  }
  return spec;
}

inline SimConfig parse_sim(const YAML::Node& node) {
  reject_unknown(node, {"dt", "eps_cut", "eps_relative", "cap_B", "floor_zero", "horizon_T", "adaptive", "min_dt", "max_steps"},
                 "sim");
  SimConfig c;
  if (node["dt"]) c.dt = as_number(node["dt"], "sim.dt");
  if (node["eps_cut"]) c.eps_cut = as_number(node["eps_cut"], "sim.eps_cut");
  if (node["eps_relative"]) c.eps_relative = as_bool(node["eps_relative"], "sim.eps_relative");
  if (node["cap_B"]) c.cap_B = as_number(node["cap_B"], "sim.cap_B");
  if (node["floor_zero"]) c.floor_zero = as_number(node["floor_zero"], "sim.floor_zero");
  if (node["horizon_T"]) c.horizon_T = as_number(node["horizon_T"], "sim.horizon_T");
  if (node["adaptive"]) c.adaptive = as_bool(node["adaptive"], "sim.adaptive");
  if (node["min_dt"]) c.min_dt = as_number(node["min_dt"], "sim.min_dt");
  if (node["max_steps"]) c.max_steps = as_count(node["max_steps"], "sim.max_steps");
  try {
    c.check();
  } catch (const DomainError& e) {
    throw ConfigError("sim", e.what(), line_of(node));
  }
  return c;
}

inline CriteriaConfig parse_criteria(const YAML::Node& node) {
  reject_unknown(node, {"rho", "rho_scan", "small_u_grid", "large_u_grid", "quad_tol"}, "criteria");
  CriteriaConfig c;
  if (node["rho"]) c.rho = as_number(node["rho"], "criteria.rho");
  if (node["rho_scan"]) c.rho_scan = as_number_list(node["rho_scan"], "criteria.rho_scan");
  if (node["small_u_grid"]) c.small_u_grid = as_number_list(node["small_u_grid"], "criteria.small_u_grid");
  if (node["large_u_grid"]) c.large_u_grid = as_number_list(node["large_u_grid"], "criteria.large_u_grid");
  if (node["quad_tol"]) c.quad_tol = as_number(node["quad_tol"], "criteria.quad_tol");
  try {
    c.check();
  } catch (const DomainError& e) {
    throw ConfigError("criteria", e.what(), line_of(node));
  }
  return c;
}

}  // namespace detail

/// Parse a configuration document. Sections: model, sim, mc, criteria,
/// output, query. Without `require_model` a missing model section leaves the
/// default (zero) rates in place.
inline RunConfig parse_config(const std::string& text, bool require_model = true) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.msg, e.mark.line + 1);
  }
  if (!root.IsMap()) throw ConfigError("", "top level must be a mapping", detail::line_of(root));
  detail::reject_unknown(root, {"model", "sim", "mc", "criteria", "output", "query"}, "");
  if (require_model && !root["model"]) throw ConfigError("model", "missing section");

  RunConfig cfg;
  if (root["model"]) cfg.model = detail::parse_model(root["model"]);
  if (root["sim"]) cfg.sim = detail::parse_sim(root["sim"]);
  if (const YAML::Node mc = root["mc"]) {
    detail::reject_unknown(mc, {"n_paths", "seed", "threads"}, "mc");
    if (mc["n_paths"]) cfg.mc.n_paths = detail::as_count(mc["n_paths"], "mc.n_paths");
    if (mc["seed"]) cfg.mc.seed = detail::as_count(mc["seed"], "mc.seed");
    if (mc["threads"]) cfg.mc.threads = static_cast<int>(detail::as_count(mc["threads"], "mc.threads"));
  }
  if (root["criteria"]) cfg.criteria = detail::parse_criteria(root["criteria"]);
  if (const YAML::Node out = root["output"]) {
    detail::reject_unknown(out, {"path", "format"}, "output");
    if (out["path"]) cfg.output.path = out["path"].as<std::string>();
    if (out["format"]) {
      cfg.output.format = out["format"].as<std::string>();
      if (!cfg.output.format.empty() && cfg.output.format != "json" && cfg.output.format != "csv") {
        throw ConfigError("output.format", "must be json or csv", detail::line_of(out["format"]));
      }
    }
  }
  if (const YAML::Node q = root["query"]) {
    detail::reject_unknown(q, {"x0", "a", "t"}, "query");
    if (q["x0"]) cfg.query.x0 = detail::as_number(q["x0"], "query.x0");
    if (q["a"]) cfg.query.a = detail::as_number(q["a"], "query.a");
    if (q["t"]) cfg.query.t = detail::as_number(q["t"], "query.t");
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path, bool require_model = true) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), require_model);
}

/// Validate the model section, reporting failures as configuration errors.
inline ValidatedModel validated_model(const RunConfig& cfg) {
  try {
    return validate(cfg.model);
  } catch (const ModelError& e) {
    throw ConfigError("model", e.what());
  }
}

/// Read a sweep grid: CSV with header r0,r1,r2,alpha,b0,b1,b2,x0,a,t. The b0
/// column accepts "gamma(alpha)" and the b2 column "b0/gamma(alpha)".
inline std::vector<SweepPoint> parse_grid_csv(const std::string& text) {
  static const std::vector<std::string> kColumns = {"r0", "r1", "r2", "alpha", "b0", "b1", "b2", "x0", "a", "t"};
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  std::vector<SweepPoint> grid;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(detail::strip(cell));
    return cells;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::strip(line).empty() || detail::strip(line)[0] == '#') continue;
    if (header.empty()) {
      header = split(line);
      if (header != kColumns) throw ConfigError("grid", "header must be r0,r1,r2,alpha,b0,b1,b2,x0,a,t", line_no);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != kColumns.size()) throw ConfigError("grid", "expected 10 columns", line_no);
    auto num = [&](std::size_t i) { return resolve_coefficient(cells[i], 0.0, std::nullopt, "grid." + kColumns[i], line_no); };
    SweepPoint p;
    p.r0 = num(0);
    p.r1 = num(1);
    p.r2 = num(2);
    p.alpha = num(3);
    // Coefficient expressions are resolved against this row's alpha; a bad
    // alpha leaves them NaN and the row is flagged by the sweep.
    const bool alpha_ok = p.alpha > 1.0 && p.alpha < 2.0;
    auto coef = [&](std::size_t i, std::optional<double> b0) {
      const bool expr = cells[i].find("gamma") != std::string::npos;
      if (expr && !alpha_ok) return std::numeric_limits<double>::quiet_NaN();
      return resolve_coefficient(cells[i], p.alpha, b0, "grid." + kColumns[i], line_no);
    };
    p.b0 = coef(4, std::nullopt);
    p.b1 = coef(5, p.b0);
    p.b2 = coef(6, p.b0);
    p.x0 = num(7);
    p.a = num(8);
    p.t = num(9);
    grid.push_back(p);
  }
  if (header.empty()) throw ConfigError("grid", "missing header row");
  return grid;
}

inline std::vector<SweepPoint> load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("grid", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grid_csv(buf.str());
}

}  // namespace nlbranch::cli
