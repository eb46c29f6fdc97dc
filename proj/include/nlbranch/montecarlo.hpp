#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nlbranch/criteria.hpp"
#include "nlbranch/model.hpp"
#include "nlbranch/rng.hpp"
#include "nlbranch/simulator.hpp"

namespace nlbranch {

/// Worker count: `requested` if positive, else NLBRANCH_THREADS, else 1.
inline unsigned resolve_threads(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  if (const char* env = std::getenv("NLBRANCH_THREADS")) {
    int value = 0;
    const char* end = env + std::char_traits<char>::length(env);
    auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec == std::errc() && ptr == end && value > 0) return static_cast<unsigned>(value);
  }
  return 1;
}

/// Calls body(i) for i in [0, n) on `threads` workers. Indices are handed out
/// dynamically; callers write results into slot i so the outcome does not
/// depend on scheduling. The first exception thrown by any call is rethrown.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    pool.reserve(count);
    for (unsigned w = 0; w < count; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

inline constexpr double kZ95 = 1.959963984540054;

/// Wilson score interval for k successes in n trials.
inline Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z = kZ95) {
  if (n == 0 || k > n) throw std::invalid_argument("wilson_interval: need 0 <= k <= n and n > 0");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::clamp(std::min(center - half, p), 0.0, 1.0), std::clamp(std::max(center + half, p), 0.0, 1.0)};
}

struct PassageQuery {
  double x0 = 0.0;
  double a = 0.0;
  double t = 0.0;
};

struct PassageEstimate {
  double p_hat = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  std::uint64_t n_paths = 0;
  std::uint64_t crossings = 0;
  std::uint64_t capped = 0;
  PassageQuery query;
};

/// Fraction of paths from x0 that drop below a by time t. Paths reaching the
/// cap first count as non-crossings. Replicate i runs on stream (seed, i).
inline PassageEstimate estimate_passage_prob(const ValidatedModel& model, const SimConfig& cfg, double x0, double a,
                                             double t, std::uint64_t n_paths, std::uint64_t seed,
                                             unsigned threads = 1) {
  if (!(0.0 < a && a < x0)) throw std::invalid_argument("estimate_passage_prob: need 0 < a < x0");
  if (!(t > 0.0)) throw std::invalid_argument("estimate_passage_prob: t must be positive");
  if (n_paths < 100) throw std::invalid_argument("estimate_passage_prob: need at least 100 paths");
  SimConfig run = cfg;
  run.horizon_T = t;
  run.check();
  if (!(x0 < run.cap_B)) throw std::invalid_argument("estimate_passage_prob: x0 must lie below cap_B");

  std::vector<std::uint8_t> outcome(n_paths, 0);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    RngStream rng(seed, i);
    const PassageRecord rec = simulate_until(model, run, x0, a, run.cap_B, rng);
    if (rec.tau_a_minus && *rec.tau_a_minus <= t) {
      outcome[i] = 1;
    } else if (rec.capped_at) {
      outcome[i] = 2;
    }
  });

  PassageEstimate est;
  est.n_paths = n_paths;
  est.query = {x0, a, t};
  for (std::uint8_t o : outcome) {
    est.crossings += o == 1;
    est.capped += o == 2;
  }
  est.p_hat = static_cast<double>(est.crossings) / static_cast<double>(n_paths);
  const Interval ci = wilson_interval(est.crossings, n_paths);
  est.ci95_low = ci.low;
  est.ci95_high = ci.high;
  return est;
}

struct BoundaryRates {
  double frac_zero = 0.0;
  double frac_capped = 0.0;
  Interval ci_zero;
  Interval ci_capped;
  std::uint64_t n_paths = 0;
};

/// Fractions of paths absorbed at zero and reaching the cap within T.
inline BoundaryRates extinction_explosion_rates(const ValidatedModel& model, const SimConfig& cfg, double x0,
                                                double T, std::uint64_t n_paths, std::uint64_t seed,
                                                unsigned threads = 1) {
  if (!(x0 > 0.0)) throw std::invalid_argument("extinction_explosion_rates: x0 must be positive");
  if (n_paths == 0) throw std::invalid_argument("extinction_explosion_rates: need at least one path");
  SimConfig run = cfg;
  run.horizon_T = T;
  run.check();
  if (!(x0 < run.cap_B)) throw std::invalid_argument("extinction_explosion_rates: x0 must lie below cap_B");

  std::vector<std::uint8_t> outcome(n_paths, 0);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    RngStream rng(seed, i);
    const PassageRecord rec = simulate_until(model, run, x0, 0.0, run.cap_B, rng);
    if (rec.tau_zero) {
      outcome[i] = 1;
    } else if (rec.capped_at) {
      outcome[i] = 2;
    }
  });

  std::uint64_t zero = 0;
  std::uint64_t capped = 0;
  for (std::uint8_t o : outcome) {
    zero += o == 1;
    capped += o == 2;
  }
  BoundaryRates out;
  out.n_paths = n_paths;
  out.frac_zero = static_cast<double>(zero) / static_cast<double>(n_paths);
  out.frac_capped = static_cast<double>(capped) / static_cast<double>(n_paths);
  out.ci_zero = wilson_interval(zero, n_paths);
  out.ci_capped = wilson_interval(capped, n_paths);
  return out;
}

/// One point of a power-law parameter sweep.
struct SweepPoint {
  double r0 = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double alpha = 1.5;
  double b0 = 1.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double x0 = 0.0;
  double a = 0.0;
  double t = 0.0;
};

struct SweepOptions {
  SimConfig sim;
  CriteriaConfig criteria;
  std::uint64_t n_paths = 1000;
  unsigned threads = 1;
};

struct SweepRow {
  SweepPoint point;
  std::optional<InfinityBehavior> predicted;
  std::optional<PassageEstimate> estimate;
  std::string error;

  bool valid() const { return error.empty(); }
};

/// Classify and estimate every grid point in order, all with the same seed.
/// A point that fails validation or simulation yields a flagged row.
inline std::vector<SweepRow> sweep(const std::vector<SweepPoint>& grid, const SweepOptions& opts,
                                   std::uint64_t seed) {
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const SweepPoint& p : grid) {
    SweepRow row;
    row.point = p;
    try {
      const ValidatedModel model = validate(power_law_model(p.alpha, p.b0, p.r0, p.b1, p.r1, p.b2, p.r2));
      row.predicted = classify(model, opts.criteria).infinity_behavior;
      row.estimate = estimate_passage_prob(model, opts.sim, p.x0, p.a, p.t, opts.n_paths, seed, opts.threads);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline constexpr const char* kSweepCsvHeader =
    "r0,r1,r2,alpha,b0,b1,b2,x0,a,t,predicted,p_hat,ci_low,ci_high,n_paths,seed";

inline std::string sweep_csv(const std::vector<SweepRow>& rows, std::uint64_t n_paths, std::uint64_t seed) {
  std::string out = kSweepCsvHeader;
  out += '\n';
  for (const SweepRow& row : rows) {
    const SweepPoint& p = row.point;
    for (double v : {p.r0, p.r1, p.r2, p.alpha, p.b0, p.b1, p.b2, p.x0, p.a, p.t}) {
      out += format_double(v);
      out += ',';
    }
    if (row.valid()) {
      out += to_string(*row.predicted);
      for (double v : {row.estimate->p_hat, row.estimate->ci95_low, row.estimate->ci95_high}) {
        out += ',';
        out += format_double(v);
      }
    } else {
      out += "invalid,nan,nan,nan";
    }
    out += ',' + std::to_string(n_paths) + ',' + std::to_string(seed) + '\n';
  }
  return out;
}

}  // namespace nlbranch
