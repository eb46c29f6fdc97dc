#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nlbranch/criteria.hpp"
#include "nlbranch/model.hpp"
#include "nlbranch/montecarlo.hpp"
#include "nlbranch/rng.hpp"
#include "nlbranch/special.hpp"

namespace nlbranch {

/// Critical power-law models with U = (0, inf) and alpha = 1.5.
namespace reference_models {

/// Diffusion-critical geometric Brownian motion: a0 = u, a1 = 2u^2.
inline ValidatedModel gbm() { return validate(power_law_model(1.5, 1.0, 1.0, 2.0, 2.0, 0.0, 0.0)); }

/// Jump-critical: a0 = Gamma(1.5) u, a2 = u^1.5.
inline ValidatedModel jump_critical() {
  return validate(power_law_model(1.5, gamma(1.5), 1.0, 0.0, 0.0, 1.0, 1.5));
}

/// Diffusion and jumps together: a0 = (0.5 + Gamma(1.5)) u, a1 = u^2, a2 = u^1.5.
inline ValidatedModel mixed_critical() {
  return validate(power_law_model(1.5, 0.5 + gamma(1.5), 1.0, 1.0, 2.0, 1.0, 1.5));
}

}  // namespace reference_models

struct SelftestCheck {
  std::string name;
  bool passed = false;
  /// Worst observed error, in the units the tolerance is stated in.
  double worst = 0.0;
  std::string detail;
};

struct SelftestOptions {
  /// Multiplies c_alpha inside the stable identity check; 1 leaves it exact.
  double c_alpha_scale = 1.0;
};

namespace detail {

inline SelftestCheck check_stable_identity(const SelftestOptions& opts) {
  SelftestCheck c{"stable_identity", true, 0.0, ""};
  for (double alpha : {1.01, 1.1, 1.5, 1.9, 1.99}) {
    const bool edge = alpha < 1.05 || alpha > 1.95;
    const double tol = edge ? 1e-6 : 1e-8;
    for (double u : {1.0, 10.0, 1e3}) {
      const StableMeasure mu{alpha, std::nullopt};
      const double got = opts.c_alpha_scale * stable_phi_integral(mu, u, 1e-12).value;
      const double want = gamma(alpha) * std::pow(u, -alpha);
      const double rel = std::abs(got - want) / want;
      // Scaled so that 1 is the tolerance at every point.
      c.worst = std::max(c.worst, rel / tol);
      if (!(rel <= tol)) {
        c.passed = false;
        if (c.detail.empty()) {
          c.detail = "alpha=" + format_double(alpha) + " u=" + format_double(u) + " rel=" + format_double(rel);
        }
      }
    }
  }
  return c;
}

inline SelftestCheck check_k_sandwich() {
  SelftestCheck c{"k_integral_sandwich", true, 0.0, ""};
  for (double alpha : {1.2, 1.5, 1.8}) {
    for (double rho : {0.5, 1.0, 2.0}) {
      for (double u : {10.0, 1e2, 1e4}) {
        const double v = stable_k_integral(StableMeasure{alpha, std::nullopt}, u, rho, 1e-10).value;
        const double lo = k_integral_lower_bound(alpha, u, rho);
        const double hi = k_integral_upper_bound(alpha, u, rho);
        c.worst = std::max(c.worst, v / hi);
        if (!(lo <= v && v <= hi)) {
          c.passed = false;
          if (c.detail.empty()) {
            c.detail = "alpha=" + format_double(alpha) + " rho=" + format_double(rho) + " u=" + format_double(u);
          }
        }
      }
    }
  }
  return c;
}

inline SelftestCheck check_generator() {
  SelftestCheck c{"generator_consistency", true, 0.0, ""};
  const TestFunction ln = log_test_function();
  const std::array<std::pair<const char*, ValidatedModel>, 3> models = {
      {{"gbm", reference_models::gbm()},
       {"jump_critical", reference_models::jump_critical()},
       {"mixed_critical", reference_models::mixed_critical()}}};
  for (const auto& [label, m] : models) {
    for (double u : {5.0, 1e2, 1e6}) {
      const double p = phi(m, u, 1e-12);
      const double err = std::abs(apply_generator(m, ln, u, 1e-12) + p) / (1e-8 * (1.0 + std::abs(p)));
      c.worst = std::max(c.worst, err);
      if (!(err <= 1.0)) {
        c.passed = false;
        if (c.detail.empty()) c.detail = std::string(label) + " u=" + format_double(u);
      }
    }
  }
  return c;
}

inline SelftestCheck check_rng() {
  SelftestCheck c{"rng_determinism", true, 0.0, ""};
  using Block = std::array<std::uint32_t, 4>;
  if (philox4x32({0, 0, 0, 0}, {0, 0}) != Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}) {
    c.passed = false;
    c.detail = "philox known answer";
    return c;
  }
  RngStream a(2024, 3);
  RngStream b(2024, 3);
  RngStream resumed(2024, 3, 500);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t x = a.next_u64();
    if (x != b.next_u64() || (i >= 500 && x != resumed.next_u64())) {
      c.passed = false;
      c.detail = "stream replay";
      return c;
    }
  }
  SimConfig sim;
  sim.dt = 1e-2;
  const ValidatedModel m = reference_models::gbm();
  const PassageEstimate one = estimate_passage_prob(m, sim, 10.0, 1.0, 1.0, 200, 11, 1);
  const PassageEstimate four = estimate_passage_prob(m, sim, 10.0, 1.0, 1.0, 200, 11, 4);
  if (one.crossings != four.crossings || one.capped != four.capped) {
    c.passed = false;
    c.detail = "thread count changed a passage estimate";
  }
  return c;
}

}  // namespace detail

/// The invariant battery: stable integral identity, K-integral bounds,
/// generator consistency and RNG determinism.
inline std::vector<SelftestCheck> run_selftest(const SelftestOptions& opts = {}) {
  return {detail::check_stable_identity(opts), detail::check_k_sandwich(), detail::check_generator(),
          detail::check_rng()};
}

inline bool all_passed(const std::vector<SelftestCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const SelftestCheck& c) { return c.passed; });
}

}  // namespace nlbranch
