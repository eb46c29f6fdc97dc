#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "nlbranch/cli/config.hpp"
#include "nlbranch/criteria.hpp"
#include "nlbranch/montecarlo.hpp"
#include "nlbranch/selftest.hpp"
#include "nlbranch/simulator.hpp"

#ifndef NLBRANCH_VERSION
#define NLBRANCH_VERSION "0.0.0"
#endif

namespace nlbranch::cli {

using nlohmann::json;

namespace detail {

inline json rate_json(const RateFunction& f) {
  if (f.is_power_law()) return {{"b", f.power_law().b}, {"r", f.power_law().r}};
  json knots = json::array();
  for (const Knot& k : f.table().knots) knots.push_back({k.u, k.value});
  return knots;
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

/// The configuration with every coefficient resolved to a number, in the
/// layout parse_config reads. JSON is valid YAML, so dump() re-parses.
inline json config_json(const RunConfig& cfg) {
  const ModelSpec& m = cfg.model;
  json model = {{"alpha", m.mu.alpha}};
  if (m.mu.support_cut) model["support_cut"] = *m.mu.support_cut;
  json tables = json::object();
  const RateFunction* rates[] = {&m.a0, &m.a1, &m.a2, &m.a3};
  for (int i = 0; i < 4; ++i) {
    const std::string idx = std::to_string(i);
    if (rates[i]->is_power_law()) {
      model["b" + idx] = rates[i]->power_law().b;
      model["r" + idx] = rates[i]->power_law().r;
    } else {
      tables["a" + idx] = detail::rate_json(*rates[i]);
    }
  }
  if (!tables.empty()) model["tables"] = tables;
  if (!m.nu.empty()) {
    json nu = json::array();
    for (const Atom& a : m.nu.atoms) nu.push_back({{"z", a.z}, {"weight", a.weight}});
    model["nu"] = nu;
  }
  const SimConfig& s = cfg.sim;
  json out = {
      {"model", model},
      {"sim",
       {{"dt", s.dt},
        {"eps_cut", s.eps_cut},
        {"eps_relative", s.eps_relative},
        {"cap_B", s.cap_B},
        {"floor_zero", s.floor_zero},
        {"horizon_T", s.horizon_T},
        {"adaptive", s.adaptive},
        {"min_dt", s.min_dt},
        {"max_steps", s.max_steps}}},
      {"mc", {{"n_paths", cfg.mc.n_paths}, {"seed", cfg.mc.seed}, {"threads", cfg.mc.threads}}},
      {"criteria",
       {{"rho", cfg.criteria.rho},
        {"rho_scan", cfg.criteria.rho_scan},
        {"small_u_grid", cfg.criteria.small_u_grid},
        {"large_u_grid", cfg.criteria.large_u_grid},
        {"quad_tol", cfg.criteria.quad_tol}}},
      {"output", {{"path", cfg.output.path}, {"format", cfg.output.format}}},
  };
  json query = json::object();
  if (cfg.query.x0) query["x0"] = *cfg.query.x0;
  if (cfg.query.a) query["a"] = *cfg.query.a;
  if (cfg.query.t) query["t"] = *cfg.query.t;
  if (!query.empty()) out["query"] = query;
  return out;
}

inline json to_json(const BoundaryReport& r) {
  auto grid = [](const std::vector<GridPoint>& pts) {
    json arr = json::array();
    for (const GridPoint& p : pts) arr.push_back({{"u", p.u}, {"phi", p.phi}, {"h_rho", detail::optional_json(p.h_rho)}});
    return arr;
  };
  return {{"no_extinction", to_string(r.no_extinction)},
          {"no_explosion", to_string(r.no_explosion)},
          {"infinity_behavior", to_string(r.infinity_behavior)},
          {"method", to_string(r.method)},
          {"rho", r.rho},
          {"evidence", {{"small_u", grid(r.small_u)}, {"large_u", grid(r.large_u)}}}};
}

inline json to_json(const PassageEstimate& e) {
  return {{"x0", e.query.x0},        {"a", e.query.a},
          {"t", e.query.t},          {"p_hat", e.p_hat},
          {"ci95_low", e.ci95_low},  {"ci95_high", e.ci95_high},
          {"n_paths", e.n_paths},    {"crossings", e.crossings},
          {"capped", e.capped}};
}

inline json to_json(const SweepRow& row) {
  const SweepPoint& p = row.point;
  json out = {{"r0", p.r0}, {"r1", p.r1}, {"r2", p.r2}, {"alpha", p.alpha}, {"b0", p.b0},
              {"b1", p.b1}, {"b2", p.b2}, {"x0", p.x0}, {"a", p.a},         {"t", p.t}};
  if (row.valid()) {
    out["predicted"] = to_string(*row.predicted);
    out["estimate"] = to_json(*row.estimate);
  } else {
    out["predicted"] = "invalid";
    out["error"] = row.error;
  }
  return out;
}

inline json to_json(const std::vector<PathState>& path) {
  json t = json::array();
  json x = json::array();
  for (const PathState& s : path) {
    t.push_back(s.t);
    x.push_back(s.x);
  }
  const PathState& last = path.back();
  return {{"t", t}, {"x", x}, {"absorbed_zero", last.absorbed_zero}, {"capped", last.capped}};
}

inline json to_json(const std::vector<SelftestCheck>& checks) {
  json arr = json::array();
  for (const SelftestCheck& c : checks) {
    arr.push_back({{"name", c.name}, {"passed", c.passed}, {"worst", c.worst}, {"detail", c.detail}});
  }
  return arr;
}

inline json versions() {
  return {{"nlbranch", NLBRANCH_VERSION},
          {"compiler", __VERSION__},
          {"cplusplus", __cplusplus},
          {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                       "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

inline json make_report(const std::string& command, const json& config, const json& results, double wall_seconds) {
  return {{"command", command},
          {"config", config},
          {"results", results},
          {"versions", versions()},
          {"wall_clock_seconds", wall_seconds}};
}

/// Path trace as "t,x" rows with a header.
inline std::string path_csv(const std::vector<PathState>& path) {
  std::string out = "t,x\n";
  for (const PathState& s : path) out += format_double(s.t) + ',' + format_double(s.x) + '\n';
  return out;
}

}  // namespace nlbranch::cli
