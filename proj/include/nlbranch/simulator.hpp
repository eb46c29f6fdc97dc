#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nlbranch/criteria.hpp"
#include "nlbranch/errors.hpp"
#include "nlbranch/model.hpp"
#include "nlbranch/rng.hpp"

namespace nlbranch {

/// Discretization controls for the Euler jump scheme.
struct SimConfig {
  double dt = 1e-3;
  /// Jumps above eps are simulated exactly; the rest become a Gaussian.
  double eps_cut = 1e-3;
  /// When set, the threshold is eps_cut * X at the start of each step.
  bool eps_relative = true;
  /// Explosion proxy: reaching cap_B freezes the path.
  double cap_B = 1e12;
  /// A step landing at or below this level is absorbed at zero.
  double floor_zero = 0.0;
  double horizon_T = 1.0;
  bool adaptive = false;
  double min_dt = 1e-9;
  std::uint64_t max_steps = 100'000'000;

  void check() const {
    if (!(dt > 0.0)) throw DomainError("sim: dt must be positive");
    if (!(eps_cut > 0.0)) throw DomainError("sim: eps_cut must be positive");
    if (!(cap_B > 0.0)) throw DomainError("sim: cap_B must be positive");
    if (!(floor_zero >= 0.0) || !(floor_zero < cap_B)) throw DomainError("sim: floor_zero must lie in [0, cap_B)");
    if (!(horizon_T > 0.0)) throw DomainError("sim: horizon_T must be positive");
    if (!(min_dt > 0.0)) throw DomainError("sim: min_dt must be positive");
  }
};

struct PathState {
  double t = 0.0;
  double x = 0.0;
  bool absorbed_zero = false;
  bool capped = false;

  bool frozen() const { return absorbed_zero || capped; }
  bool operator==(const PathState&) const = default;
};

struct PassageRecord {
  std::optional<double> tau_a_minus;
  std::optional<double> tau_b_plus;
  std::optional<double> tau_zero;
  std::optional<double> capped_at;
  bool budget_exhausted = false;
  PathState final;
};

/// Per-unit-rate quantities of the stable measure split at eps (and
/// restricted to (0, cut]): large-jump intensity, mean of the large jumps,
/// and second moment of the small jumps.
struct StableStepParams {
  double lambda_eps = 0.0;
  double m_eps = 0.0;
  double sigma2_eps = 0.0;
};

inline StableStepParams stable_step_params(double alpha, double eps,
                                           double cut = std::numeric_limits<double>::infinity()) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw DomainError("stable_step_params: alpha must lie in (1, 2)");
  if (!(eps > 0.0)) throw DomainError("stable_step_params: eps must be positive");
  if (!(cut > 0.0)) throw DomainError("stable_step_params: cut must be positive");
  const double c = StableMeasure{alpha, std::nullopt}.c_alpha();
  StableStepParams p;
  if (eps >= cut) {
    p.sigma2_eps = c * std::pow(cut, 2.0 - alpha) / (2.0 - alpha);
    return p;
  }
  const double tail_a = std::isinf(cut) ? 0.0 : std::pow(cut, -alpha);
  const double tail_m = std::isinf(cut) ? 0.0 : std::pow(cut, 1.0 - alpha);
  p.lambda_eps = c * (std::pow(eps, -alpha) - tail_a) / alpha;
  p.m_eps = c * (std::pow(eps, 1.0 - alpha) - tail_m) / (alpha - 1.0);
  p.sigma2_eps = c * std::pow(eps, 2.0 - alpha) / (2.0 - alpha);
  return p;
}

/// Sampler for jump sizes from the stable measure conditioned on (eps, cut],
/// by inverting the (truncated) Pareto tail.
class LargeJumpSampler {
 public:
  LargeJumpSampler(double alpha, double eps, double cut = std::numeric_limits<double>::infinity())
      : eps_(eps),
        neg_inv_alpha_(-1.0 / alpha),
        keep_(std::isinf(cut) ? 1.0 : -std::expm1(alpha * std::log(eps / cut))) {}

  double operator()(RngStream& rng) const {
    const double u = rng.next_uniform();
    // keep == 1 is the untruncated tail; 1 - u and u have the same law.
    const double tail = keep_ == 1.0 ? u : 1.0 - u * keep_;
    return eps_ * std::pow(tail, neg_inv_alpha_);
  }

 private:
  double eps_;
  double neg_inv_alpha_;
  double keep_;
};

inline double sample_large_jump(RngStream& rng, double alpha, double eps,
                                double cut = std::numeric_limits<double>::infinity()) {
  return LargeJumpSampler(alpha, eps, cut)(rng);
}

namespace detail {

inline double sample_atom(RngStream& rng, const FiniteMeasure& nu, double total) {
  const double target = rng.next_uniform() * total;
  double acc = 0.0;
  for (const auto& atom : nu.atoms) {
    acc += atom.weight;
    if (target < acc) return atom.z;
  }
  return nu.atoms.back().z;
}

}  // namespace detail

namespace detail {

struct StepRates {
  double a0;
  double a1;
  double a2;
  double a3;
  double eps;
  StableStepParams stable;
};

inline StepRates step_rates(const ValidatedModel& model, const SimConfig& cfg, double x) {
  StepRates r{model.a0(x), model.a1(x), model.a2(x), model.a3(x), 0.0, {}};
  if (r.a2 > 0.0) {
    r.eps = cfg.eps_relative ? cfg.eps_cut * x : cfg.eps_cut;
    r.stable = stable_step_params(model.mu().alpha, r.eps, model.mu().cut());
  }
  return r;
}

inline double step_size(const StepRates& r, const ValidatedModel& model, const SimConfig& cfg, double x) {
  double dt = cfg.dt;
  if (cfg.adaptive && x > 0.0) {
    if (r.a0 > 0.0) dt = std::min(dt, 0.01 * x / r.a0);
    if (r.a1 > 0.0) dt = std::min(dt, 0.01 * x * x / r.a1);
    const double rate = r.a3 * model.nu().total_mass() + r.a2 * r.stable.lambda_eps;
    if (rate > 0.0) dt = std::min(dt, 0.01 / rate);
    dt = std::max(dt, cfg.min_dt);
  }
  return dt;
}

}  // namespace detail

/// Length of the next step from state x.
inline double step_size(const ValidatedModel& model, const SimConfig& cfg, double x) {
  return detail::step_size(detail::step_rates(model, cfg, x), model, cfg, x);
}

/// One Euler step of the jump SDE with rates frozen at the left endpoint.
///
/// X' = X + a0 dt - a2 m_eps dt + sqrt(a1 dt) N + sqrt(a2 sigma2_eps dt) N'
///        + (jumps above eps, Poisson(a2 lambda_eps dt) of them)
///        + (nu jumps, Poisson(a3 |nu| dt) of them).
/// The step never crosses cfg.horizon_T. Frozen states are returned as is.
inline PathState step(const PathState& state, const ValidatedModel& model, const SimConfig& cfg, RngStream& rng) {
  if (state.frozen()) return state;
  const double x = state.x;
  const detail::StepRates r = detail::step_rates(model, cfg, x);
  const double remaining = cfg.horizon_T - state.t;
  const double dt = std::min(detail::step_size(r, model, cfg, x), remaining > 0.0 ? remaining : cfg.dt);

  double next = x + r.a0 * dt;
  if (r.a1 > 0.0) next += std::sqrt(r.a1 * dt) * rng.next_normal();

  if (r.a2 > 0.0) {
    const StableStepParams& p = r.stable;
    next += -r.a2 * p.m_eps * dt + std::sqrt(r.a2 * p.sigma2_eps * dt) * rng.next_normal();
    if (p.lambda_eps > 0.0) {
      const std::uint64_t n = rng.next_poisson(r.a2 * p.lambda_eps * dt);
      const LargeJumpSampler jump(model.mu().alpha, r.eps, model.mu().cut());
      double jumps = 0.0;
      for (std::uint64_t i = 0; i < n; ++i) jumps += jump(rng);
      next += jumps;
    }
  }

  if (r.a3 > 0.0 && !model.nu().empty()) {
    const double total = model.nu().total_mass();
    const std::uint64_t m = rng.next_poisson(r.a3 * total * dt);
    for (std::uint64_t k = 0; k < m; ++k) next += detail::sample_atom(rng, model.nu(), total);
  }

  PathState out{state.t + dt, next, false, false};
  if (!(next > cfg.floor_zero)) {
    out.x = 0.0;
    out.absorbed_zero = true;
  } else if (next >= cfg.cap_B) {
    out.capped = true;
  }
  return out;
}

namespace detail {

inline bool horizon_reached(double t, double horizon) { return t >= horizon * (1.0 - 1e-12); }

}  // namespace detail

/// Run one path from x0 until the first of: X < a, X > b, absorption at
/// zero, the cap, or cfg.horizon_T. Crossings are detected at step times.
inline PassageRecord simulate_until(const ValidatedModel& model, const SimConfig& cfg, double x0, double a,
                                    double b, RngStream& rng) {
  cfg.check();
  if (!(a >= 0.0 && a < x0 && x0 < b && b <= cfg.cap_B)) {
    throw std::invalid_argument("simulate_until: need 0 <= a < x0 < b <= cap_B");
  }
  PassageRecord rec;
  PathState state{0.0, x0, false, false};
  std::uint64_t steps = 0;
  while (!detail::horizon_reached(state.t, cfg.horizon_T)) {
    state = step(state, model, cfg, rng);
    bool stop = false;
    if (state.x < a) {
      rec.tau_a_minus = state.t;
      stop = true;
    }
    if (state.absorbed_zero) {
      rec.tau_zero = state.t;
      stop = true;
    }
    if (state.x > b) {
      rec.tau_b_plus = state.t;
      stop = true;
    }
    if (state.capped) {
      rec.capped_at = state.t;
      stop = true;
    }
    if (stop) break;
    if (++steps >= cfg.max_steps) {
      rec.budget_exhausted = true;
      break;
    }
  }
  rec.final = state;
  return rec;
}

/// Every state visited by one path from x0 up to cfg.horizon_T, absorption,
/// the cap or the step budget. The first entry is (0, x0).
inline std::vector<PathState> simulate_path(const ValidatedModel& model, const SimConfig& cfg, double x0,
                                            RngStream& rng) {
  cfg.check();
  if (!(x0 > 0.0 && x0 < cfg.cap_B)) throw std::invalid_argument("simulate_path: need 0 < x0 < cap_B");
  std::vector<PathState> path{{0.0, x0, false, false}};
  std::uint64_t steps = 0;
  while (!path.back().frozen() && !detail::horizon_reached(path.back().t, cfg.horizon_T) &&
         steps++ < cfg.max_steps) {
    path.push_back(step(path.back(), model, cfg, rng));
  }
  return path;
}

/// Keep at most max_points states at an even stride, always including the
/// first and the last.
inline std::vector<PathState> thin_path(const std::vector<PathState>& path, std::size_t max_points) {
  if (max_points < 2) throw std::invalid_argument("thin_path: max_points must be at least 2");
  if (path.size() <= max_points) return path;
  std::vector<PathState> out;
  out.reserve(max_points);
  const double stride = static_cast<double>(path.size() - 1) / static_cast<double>(max_points - 1);
  for (std::size_t k = 0; k + 1 < max_points; ++k) {
    out.push_back(path[static_cast<std::size_t>(static_cast<double>(k) * stride)]);
  }
  out.push_back(path.back());
  return out;
}

struct MartingaleResidual {
  double residual = 0.0;
  double stderr_ = 0.0;
};

/// Sample mean of g(X_{t ^ gamma}) - g(x0) - int_0^{t ^ gamma} Lg(X_s) ds over
/// n_paths replicates, gamma the exit time from [a, b]. Path i uses stream
/// (seed, i). `generator` defaults to apply_generator(model, g, .).
inline MartingaleResidual martingale_residual(const ValidatedModel& model, const TestFunction& g, const SimConfig& cfg,
                                              double x0, double t, double a, double b, std::uint64_t n_paths,
                                              std::uint64_t seed,
                                              std::function<double(double)> generator = {}) {
  if (!(0.0 < a && a < x0 && x0 < b)) throw std::invalid_argument("martingale_residual: need 0 < a < x0 < b");
  if (n_paths < 2) throw std::invalid_argument("martingale_residual: need at least two paths");
  if (!generator) generator = [&](double u) { return apply_generator(model, g, u); };
  SimConfig run = cfg;
  run.horizon_T = t;
  run.cap_B = std::max(cfg.cap_B, 2.0 * b);
  run.check();

  const double g0 = g(x0);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::uint64_t i = 0; i < n_paths; ++i) {
    RngStream rng(seed, i);
    PathState state{0.0, x0, false, false};
    double integral = 0.0;
    while (!detail::horizon_reached(state.t, run.horizon_T)) {
      const double lg = generator(state.x);
      const PathState next = step(state, model, run, rng);
      integral += lg * (next.t - state.t);
      state = next;
      if (state.frozen() || state.x < a || state.x > b) break;
    }
    const double gx = state.absorbed_zero ? g(run.floor_zero > 0.0 ? run.floor_zero : 1e-300) : g(state.x);
    const double sample = gx - g0 - integral;
    const double delta = sample - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (sample - mean);
  }
  const double var = m2 / static_cast<double>(n_paths - 1);
  return {mean, std::sqrt(var / static_cast<double>(n_paths))};
}

}  // namespace nlbranch
