#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nlbranch/errors.hpp"
#include "nlbranch/model.hpp"
#include "nlbranch/quadrature.hpp"
#include "nlbranch/special.hpp"

namespace nlbranch {

//---------------------------------------------------------------------------//
// phi
//---------------------------------------------------------------------------//

/// Integral over v in (0, 1) of (u + v z)^(-2) (1 - v), in closed form:
/// (x - log(1 + x)) / z^2 with x = z / u.
inline double second_order_kernel(double u, double z) {
  const double x = z / u;
  if (x == 0.0) return 0.5 / (u * u);
  return log1p_remainder(x) / (x * x) / (u * u);
}

/// Integral of z^2 * second_order_kernel(u, z) against mu, by quadrature.
inline QuadResult stable_phi_integral(const StableMeasure& mu, double u, double tol) {
  return mu.integrate([u](double z) { return log1p_remainder(z / u); }, tol);
}

/// The four additive pieces of phi(u); phi is their sum.
struct PhiParts {
  double drift = 0.0;      // -a0(u)/u
  double diffusion = 0.0;  // a1(u)/(2u^2)
  double stable = 0.0;     // a2(u) * int z^2 mu(dz) int (u+vz)^-2 (1-v) dv
  double finite = 0.0;     // -a3(u) * int log(1 + z/u) nu(dz)

  double sum() const { return drift + diffusion + stable + finite; }
  double magnitude() const {
    return std::abs(drift) + std::abs(diffusion) + std::abs(stable) + std::abs(finite);
  }
};

/// With `force_quadrature` the stable piece is integrated numerically even
/// when the Gamma(alpha) u^(-alpha) closed form applies.
inline PhiParts phi_parts(const ValidatedModel& model, double u, double quad_tol = 1e-10,
                          bool force_quadrature = false) {
  if (!(u > 0.0)) throw DomainError("phi: u must be positive");
  PhiParts parts;
  parts.drift = -model.a0(u) / u;
  parts.diffusion = 0.5 * model.a1(u) / (u * u);
  const double a2 = model.a2(u);
  if (a2 != 0.0) {
    const auto& mu = model.mu();
    const double integral = (!mu.support_cut && !force_quadrature)
                                ? gamma(mu.alpha) * std::pow(u, -mu.alpha)
                                : stable_phi_integral(mu, u, quad_tol).value;
    parts.stable = a2 * integral;
  }
  const double a3 = model.a3(u);
  if (a3 != 0.0) {
    double s = 0.0;
    for (const auto& atom : model.nu().atoms) s += atom.weight * std::log1p(atom.z / u);
    parts.finite = -a3 * s;
  }
  return parts;
}

inline double phi(const ValidatedModel& model, double u, double quad_tol = 1e-10) {
  return phi_parts(model, u, quad_tol).sum();
}

inline double phi_quadrature(const ValidatedModel& model, double u, double quad_tol = 1e-10) {
  return phi_parts(model, u, quad_tol, true).sum();
}

//---------------------------------------------------------------------------//
// K_rho and H_rho
//---------------------------------------------------------------------------//

/// Below this value of y - 1 the Taylor-remainder form of K_rho is used.
inline constexpr double kKRhoSeriesThreshold = 1e-4;

/// K_rho(u, z) = f(y), y = ln(u+z)/ln(u), f(y) = y^-rho + rho y - (rho + 1).
inline double k_rho(double u, double z, double rho) {
  if (!(u > 3.0)) throw DomainError("k_rho: u must exceed 3");
  if (!(z >= 0.0)) throw DomainError("k_rho: z must be nonnegative");
  if (!(rho > 0.0)) throw DomainError("k_rho: rho must be positive");
  const double d = std::log1p(z / u) / std::log(u);  // y - 1
  if (d < kKRhoSeriesThreshold) {
    // rho(rho+1) d^2 * int_0^1 (1 + v d)^(-rho-2) (1 - v) dv, expanded in d.
    const double m = rho + 2.0;
    double coeff = 1.0;
    double sum = 0.0;
    for (int k = 0; k < 8; ++k) {
      sum += coeff / ((k + 1.0) * (k + 2.0));
      coeff *= -(m + k) / (k + 1.0) * d;
    }
    return rho * (rho + 1.0) * d * d * sum;
  }
  return std::expm1(-rho * std::log1p(d)) + rho * d;
}

/// Integral of K_rho(u, .) against mu.
inline QuadResult stable_k_integral(const StableMeasure& mu, double u, double rho, double tol) {
  if (!(u > 3.0)) throw DomainError("stable_k_integral: u must exceed 3");
  return mu.integrate([u, rho](double z) { return k_rho(u, z, rho); }, tol);
}

inline double h_rho(const ValidatedModel& model, double u, double rho, double quad_tol = 1e-10) {
  if (!(u > 3.0)) throw DomainError("h_rho: u must exceed 3");
  double h = 0.5 * model.a1(u) / (u * u);
  const double a2 = model.a2(u);
  if (a2 != 0.0) h += a2 * stable_k_integral(model.mu(), u, rho, quad_tol).value;
  const double a3 = model.a3(u);
  if (a3 != 0.0) {
    double s = 0.0;
    for (const auto& atom : model.nu().atoms) s += atom.weight * k_rho(u, atom.z, rho);
    h += a3 * s;
  }
  return h;
}

/// Upper bound rho(rho+1) u^-alpha (ln u)^-2 C^2 int (z ^ z^2) mu(dz) with
/// C = sup ln(1+z)/min(z, sqrt z) = 1.
inline double k_integral_upper_bound(double alpha, double u, double rho) {
  const StableMeasure mu{alpha, std::nullopt};
  const double moment = mu.c_alpha() * (1.0 / (2.0 - alpha) + 1.0 / (alpha - 1.0));
  const double lu = std::log(u);
  return rho * (rho + 1.0) * std::pow(u, -alpha) / (lu * lu) * moment;
}

/// Lower bound obtained by keeping only z in [1, 2] and v in [1/2, 1].
inline double k_integral_lower_bound(double alpha, double u, double rho) {
  const StableMeasure mu{alpha, std::nullopt};
  const double mass_1_2 = mu.c_alpha() * (1.0 - std::pow(2.0, -alpha)) / alpha;
  const double lu = std::log(u);
  const double l15 = std::log(1.5);
  return rho * (rho + 1.0) * std::pow(u, -alpha) / (lu * lu) *
         std::pow(1.0 + std::log(3.0) / lu, -rho - 2.0) * l15 * l15 * mass_1_2 * 0.125;
}

//---------------------------------------------------------------------------//
// Test functions and the generator
//---------------------------------------------------------------------------//

/// A C^2 function g on (0, inf) with its first two derivatives.
///
/// `jump_delta` and `jump_remainder` may be left empty; they then default to
/// g(u+z) - g(u) and g(u+z) - g(u) - z g'(u) assembled from g, g1 and g2.
struct TestFunction {
  std::function<double(double)> g;
  std::function<double(double)> g1;
  std::function<double(double)> g2;
  std::function<double(double, double)> jump_delta;
  std::function<double(double, double)> jump_remainder;

  double operator()(double u) const { return g(u); }

  double delta(double u, double z) const {
    return jump_delta ? jump_delta(u, z) : g(u + z) - g(u);
  }

  double remainder(double u, double z) const {
    if (jump_remainder) return jump_remainder(u, z);
    if (z <= 1e-2 * u) {
      // z^2 int_0^1 g''(u + z v)(1 - v) dv on a single Kronrod panel; the
      // direct difference would cancel catastrophically here.
      auto inner = [&](double v) { return g2(u + z * v) * (1.0 - v); };
      return z * z * detail::gauss_kronrod_15(inner, 0.0, 1.0).value;
    }
    return delta(u, z) - z * g1(u);
  }
};

inline TestFunction log_test_function() {
  TestFunction t;
  t.g = [](double u) { return std::log(u); };
  t.g1 = [](double u) { return 1.0 / u; };
  t.g2 = [](double u) { return -1.0 / (u * u); };
  t.jump_delta = [](double u, double z) { return std::log1p(z / u); };
  t.jump_remainder = [](double u, double z) { return -log1p_remainder(z / u); };
  return t;
}

inline TestFunction identity_test_function() {
  TestFunction t;
  t.g = [](double u) { return u; };
  t.g1 = [](double) { return 1.0; };
  t.g2 = [](double) { return 0.0; };
  t.jump_delta = [](double, double z) { return z; };
  t.jump_remainder = [](double, double) { return 0.0; };
  return t;
}

inline TestFunction constant_test_function(double c) {
  TestFunction t;
  t.g = [c](double) { return c; };
  t.g1 = [](double) { return 0.0; };
  t.g2 = [](double) { return 0.0; };
  t.jump_delta = [](double, double) { return 0.0; };
  t.jump_remainder = [](double, double) { return 0.0; };
  return t;
}

/// g(u) = shift + (ln u)^-rho for u >= 3, continued below 3 by a quintic that
/// matches value and two derivatives at u = 3 and is flat (C^2) at u = 2,
/// then constant on (0, 2].
inline TestFunction inverse_log_power_test_function(double rho, double shift = 0.0) {
  if (!(rho > 0.0)) throw DomainError("inverse_log_power_test_function: rho must be positive");
  const double l3 = std::log(3.0);
  const double v3 = std::pow(l3, -rho);
  const double d3 = -rho * std::pow(l3, -rho - 1.0) / 3.0;
  const double s3 = (rho * std::pow(l3, -rho - 1.0) + rho * (rho + 1.0) * std::pow(l3, -rho - 2.0)) / 9.0;
  // Level on (0, 2]: linear extrapolation of the value from u = 3.
  const double v2 = v3 - d3;

  // Quintic Hermite on t = u - 2 in [0, 1]: p(0) = v2, p'(0) = p''(0) = 0,
  // p(1) = v3, p'(1) = d3, p''(1) = s3.
  const double dv = v3 - v2;
  const double c3 = 10.0 * dv - 4.0 * d3 + 0.5 * s3;
  const double c4 = -15.0 * dv + 7.0 * d3 - s3;
  const double c5 = 6.0 * dv - 3.0 * d3 + 0.5 * s3;

  auto value = [=](double u) {
    if (u >= 3.0) return shift + std::pow(std::log(u), -rho);
    if (u <= 2.0) return shift + v2;
    const double t = u - 2.0;
    return shift + v2 + t * t * t * (c3 + t * (c4 + t * c5));
  };
  auto first = [=](double u) {
    if (u >= 3.0) return -rho * std::pow(std::log(u), -rho - 1.0) / u;
    if (u <= 2.0) return 0.0;
    const double t = u - 2.0;
    return t * t * (3.0 * c3 + t * (4.0 * c4 + t * 5.0 * c5));
  };
  auto second = [=](double u) {
    if (u >= 3.0) {
      const double lu = std::log(u);
      return (rho * std::pow(lu, -rho - 1.0) + rho * (rho + 1.0) * std::pow(lu, -rho - 2.0)) / (u * u);
    }
    if (u <= 2.0) return 0.0;
    const double t = u - 2.0;
    return t * (6.0 * c3 + t * (12.0 * c4 + t * 20.0 * c5));
  };

  TestFunction t;
  t.g = value;
  t.g1 = first;
  t.g2 = second;
  t.jump_delta = [=](double u, double z) {
    if (u > 3.0) {
      const double lu = std::log(u);
      const double d = std::log1p(z / u) / lu;
      return std::pow(lu, -rho) * std::expm1(-rho * std::log1p(d));
    }
    return value(u + z) - value(u);
  };
  return t;
}

/// Central-difference check of g1 and g2 at step h = 1e-5 u.
inline bool check_derivatives(const TestFunction& t, const std::vector<double>& grid) {
  for (double u : grid) {
    const double h = 1e-5 * u;
    const double fd1 = (t.g(u + h) - t.g(u - h)) / (2.0 * h);
    const double fd2 = (t.g1(u + h) - t.g1(u - h)) / (2.0 * h);
    const double d1 = t.g1(u);
    const double d2 = t.g2(u);
    if (!(std::abs(d1 - fd1) <= 1e-4 * (1.0 + std::abs(d1)))) return false;
    if (!(std::abs(d2 - fd2) <= 1e-4 * (1.0 + std::abs(d2)))) return false;
  }
  return true;
}

/// Lg(u) with the jump part written as g(u+z) - g(u) - z g'(u) against mu and
/// g(u+z) - g(u) against nu.
inline double apply_generator(const ValidatedModel& model, const TestFunction& t, double u,
                              double quad_tol = 1e-10) {
  if (!(u > 0.0)) throw DomainError("apply_generator: u must be positive");
  double out = model.a0(u) * t.g1(u);
  const double a1 = model.a1(u);
  if (a1 != 0.0) out += 0.5 * a1 * t.g2(u);
  const double a2 = model.a2(u);
  if (a2 != 0.0) {
    out += a2 * model.mu().integrate([&](double z) { return t.remainder(u, z); }, quad_tol).value;
  }
  const double a3 = model.a3(u);
  if (a3 != 0.0) {
    double s = 0.0;
    for (const auto& atom : model.nu().atoms) s += atom.weight * t.delta(u, atom.z);
    out += a3 * s;
  }
  return out;
}

namespace detail {

// int_0^1 h(u + z v) w(v) dv where h varies on the scale u; for z > u the
// variable v = ((1 + x)^s - 1)/x, x = z/u, spreads the region near v = 0.
template <class H, class W>
double log_spaced_unit_integral(H&& h, W&& weight, double u, double z, double tol) {
  const double x = z / u;
  if (x <= 1.0) {
    return integrate_unit([&](double v) { return h(u + z * v) * weight(v); }, tol).value;
  }
  const double ell = std::log1p(x);
  return integrate_unit(
             [&](double s) {
               const double grow = std::exp(s * ell);
               const double v = std::expm1(s * ell) / x;
               return h(u * grow) * weight(v) * ell * grow / x;
             },
             tol)
      .value;
}

}  // namespace detail

/// Lg(u) in the Taylor-remainder form: the mu part as
/// z^2 int_0^1 g''(u + zv)(1-v) dv and the nu part as z int_0^1 g'(u + zv) dv,
/// with every inner integral done by quadrature.
inline double apply_generator_taylor(const ValidatedModel& model, const TestFunction& t, double u,
                                     double quad_tol = 1e-10) {
  if (!(u > 0.0)) throw DomainError("apply_generator_taylor: u must be positive");
  const double inner_tol = 0.1 * quad_tol;
  double out = model.a0(u) * t.g1(u);
  const double a1 = model.a1(u);
  if (a1 != 0.0) out += 0.5 * a1 * t.g2(u);
  const double a2 = model.a2(u);
  if (a2 != 0.0) {
    auto jump = [&](double z) {
      const double inner = detail::log_spaced_unit_integral(
          t.g2, [](double v) { return 1.0 - v; }, u, z, inner_tol);
      return z * z * inner;
    };
    out += a2 * model.mu().integrate(jump, quad_tol).value;
  }
  const double a3 = model.a3(u);
  if (a3 != 0.0) {
    double s = 0.0;
    for (const auto& atom : model.nu().atoms) {
      s += atom.weight * atom.z *
           detail::log_spaced_unit_integral(t.g1, [](double) { return 1.0; }, u, atom.z, inner_tol);
    }
    out += a3 * s;
  }
  return out;
}

//---------------------------------------------------------------------------//
// Classification
//---------------------------------------------------------------------------//

enum class Verdict { Established, NotEstablished, Inconclusive };
enum class InfinityBehavior { StaysInfinite, ComesDownFromInfinity, Inconclusive };
enum class Method { Symbolic, Numeric };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Established: return "established";
    case Verdict::NotEstablished: return "not_established";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

inline const char* to_string(InfinityBehavior b) {
  switch (b) {
    case InfinityBehavior::StaysInfinite: return "stays_infinite";
    case InfinityBehavior::ComesDownFromInfinity: return "comes_down_from_infinity";
    case InfinityBehavior::Inconclusive: return "inconclusive";
  }
  return "?";
}

inline const char* to_string(Method m) { return m == Method::Symbolic ? "symbolic" : "numeric"; }

struct CriteriaConfig {
  double rho = 1.0;
  std::vector<double> rho_scan = {0.5, 1.0, 2.0, 4.0};
  std::vector<double> small_u_grid = {1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  std::vector<double> large_u_grid = {10.0, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8};
  double quad_tol = 1e-10;

  void check() const {
    if (!(rho > 0.0)) throw DomainError("criteria: rho must be positive");
    for (double r : rho_scan) {
      if (!(r > 0.0)) throw DomainError("criteria: rho_scan entries must be positive");
    }
    if (small_u_grid.empty() || large_u_grid.empty()) throw DomainError("criteria: grids must be nonempty");
    for (std::size_t i = 0; i < small_u_grid.size(); ++i) {
      if (!(small_u_grid[i] > 0.0) || (i > 0 && !(small_u_grid[i] < small_u_grid[i - 1]))) {
        throw DomainError("criteria: small_u_grid must be positive and decreasing");
      }
    }
    for (std::size_t i = 0; i < large_u_grid.size(); ++i) {
      if (!(large_u_grid[i] > 3.0) || (i > 0 && !(large_u_grid[i] > large_u_grid[i - 1]))) {
        throw DomainError("criteria: large_u_grid must exceed 3 and increase");
      }
    }
    if (!(quad_tol > 0.0)) throw DomainError("criteria: quad_tol must be positive");
  }
};

struct GridPoint {
  double u = 0.0;
  double phi = 0.0;
  std::optional<double> h_rho;
};

struct BoundaryReport {
  Verdict no_extinction = Verdict::Inconclusive;
  Verdict no_explosion = Verdict::Inconclusive;
  InfinityBehavior infinity_behavior = InfinityBehavior::Inconclusive;
  Method method = Method::Numeric;
  double rho = 1.0;
  std::vector<GridPoint> small_u;
  std::vector<GridPoint> large_u;
};

namespace detail {

enum class SignClass { Zero, Negative, Positive, Mixed };

inline bool allows_nonpositive(SignClass s) { return s == SignClass::Zero || s == SignClass::Negative; }
inline bool allows_nonnegative(SignClass s) { return s == SignClass::Zero || s == SignClass::Positive; }

struct PowerTerm {
  double coef;
  double exponent;
};

// Sign of sum coef * u^exponent as u -> inf (or u -> 0), after merging
// terms with equal exponents.
inline SignClass dominant_sign(std::vector<PowerTerm> terms, bool at_infinity) {
  std::sort(terms.begin(), terms.end(), [](const PowerTerm& a, const PowerTerm& b) { return a.exponent < b.exponent; });
  std::vector<PowerTerm> merged;
  for (const auto& t : terms) {
    if (!merged.empty() && std::abs(merged.back().exponent - t.exponent) <= kCriticalityTolerance) {
      merged.back().coef += t.coef;
      continue;
    }
    merged.push_back(t);
  }
  // Coefficients that cancel to rounding are zero.
  double scale = 0.0;
  for (const auto& t : terms) scale = std::max(scale, std::abs(t.coef));
  auto sign_of = [&](double c) {
    if (std::abs(c) <= kCriticalityTolerance * scale) return SignClass::Zero;
    return c < 0.0 ? SignClass::Negative : SignClass::Positive;
  };
  if (at_infinity) {
    for (auto it = merged.rbegin(); it != merged.rend(); ++it) {
      const SignClass s = sign_of(it->coef);
      if (s != SignClass::Zero) return s;
    }
  } else {
    for (const auto& t : merged) {
      const SignClass s = sign_of(t.coef);
      if (s != SignClass::Zero) return s;
    }
  }
  return SignClass::Zero;
}

inline SignClass grid_sign(const std::vector<GridPoint>& pts, const std::vector<double>& scales) {
  bool neg = false;
  bool pos = false;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double v = pts[i].phi;
    if (std::abs(v) <= 1e-10 * scales[i]) continue;
    (v < 0.0 ? neg : pos) = true;
  }
  if (neg && pos) return SignClass::Mixed;
  if (neg) return SignClass::Negative;
  if (pos) return SignClass::Positive;
  return SignClass::Zero;
}

}  // namespace detail

/// Apply the boundary criteria to a model.
///
/// Pure power-law models with U = (0, inf) and empty nu are decided from the
/// exponents and coefficients (Method::Symbolic). Everything else is decided
/// on the configured grids and reported Inconclusive unless the grid evidence
/// is uniform (Method::Numeric). Both paths fill the evidence grids.
inline BoundaryReport classify(const ValidatedModel& model, const CriteriaConfig& cfg) {
  cfg.check();
  BoundaryReport report;
  report.rho = cfg.rho;

  std::vector<double> small_scale;
  for (double u : cfg.small_u_grid) {
    const PhiParts p = phi_parts(model, u, cfg.quad_tol);
    report.small_u.push_back({u, p.sum(), std::nullopt});
    small_scale.push_back(p.magnitude());
  }
  std::vector<double> large_scale;
  for (double u : cfg.large_u_grid) {
    const PhiParts p = phi_parts(model, u, cfg.quad_tol);
    report.large_u.push_back({u, p.sum(), std::nullopt});
    large_scale.push_back(p.magnitude());
  }
  auto fill_h = [&](double rho) {
    report.rho = rho;
    for (auto& pt : report.large_u) pt.h_rho = h_rho(model, pt.u, rho, cfg.quad_tol);
  };

  std::vector<double> scan = {cfg.rho};
  for (double r : cfg.rho_scan) {
    if (std::find(scan.begin(), scan.end(), r) == scan.end()) scan.push_back(r);
  }

  if (model.is_pure_power_law()) {
    report.method = Method::Symbolic;
    const auto& s = model.spec();
    const PowerLaw p0 = s.a0.power_law();
    const PowerLaw p1 = s.a1.power_law();
    const PowerLaw p2 = s.a2.power_law();
    const double alpha = s.mu.alpha;
    std::vector<detail::PowerTerm> terms = {{-p0.b, p0.r - 1.0}};
    if (p1.b > 0.0) terms.push_back({0.5 * p1.b, p1.r - 2.0});
    if (p2.b > 0.0) terms.push_back({gamma(alpha) * p2.b, p2.r - alpha});
    const auto at_zero = detail::dominant_sign(terms, false);
    const auto at_inf = detail::dominant_sign(terms, true);

    report.no_extinction = detail::allows_nonpositive(at_zero) ? Verdict::Established : Verdict::NotEstablished;
    report.no_explosion = detail::allows_nonnegative(at_inf) ? Verdict::Established : Verdict::NotEstablished;

    // H_rho(u) ~ b1/2 u^(r1-2) + Theta(b2 u^(r2-alpha) (ln u)^-2) for every rho.
    const bool diffusion_grows = p1.b > 0.0 && p1.r > 2.0 + kCriticalityTolerance;
    const bool jumps_grow = p2.b > 0.0 && p2.r > alpha + kCriticalityTolerance;
    const bool h_bounded = !diffusion_grows && !jumps_grow;
    if (detail::allows_nonpositive(at_inf) && h_bounded) {
      report.infinity_behavior = InfinityBehavior::StaysInfinite;
    } else if (detail::allows_nonnegative(at_inf) && !h_bounded) {
      report.infinity_behavior = InfinityBehavior::ComesDownFromInfinity;
    } else {
      report.infinity_behavior = InfinityBehavior::Inconclusive;
    }
    fill_h(cfg.rho);
    return report;
  }

  report.method = Method::Numeric;
  const auto small_sign = detail::grid_sign(report.small_u, small_scale);
  const auto large_sign = detail::grid_sign(report.large_u, large_scale);

  auto verdict_for = [](detail::SignClass s, bool want_nonpositive) {
    if (s == detail::SignClass::Mixed) return Verdict::Inconclusive;
    const bool ok = want_nonpositive ? detail::allows_nonpositive(s) : detail::allows_nonnegative(s);
    return ok ? Verdict::Established : Verdict::NotEstablished;
  };
  report.no_extinction = verdict_for(small_sign, true);
  report.no_explosion = verdict_for(large_sign, false);

  const std::size_t n = cfg.large_u_grid.size();
  const std::size_t tail = n >= 3 ? n - 3 : 0;
  for (double rho : scan) {
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = h_rho(model, cfg.large_u_grid[i], rho, cfg.quad_tol);
    bool bounded = true;
    bool diverging = n >= 2;
    for (std::size_t i = tail + 1; i < n; ++i) {
      const double lu0 = std::log(cfg.large_u_grid[i - 1]);
      const double lu1 = std::log(cfg.large_u_grid[i]);
      if (h[i] > h[i - 1] * (1.0 + 1e-9)) bounded = false;
      if (!(std::pow(lu1, -rho - 2.0) * h[i] > std::pow(lu0, -rho - 2.0) * h[i - 1])) diverging = false;
    }
    if (detail::allows_nonpositive(large_sign) && bounded) {
      report.infinity_behavior = InfinityBehavior::StaysInfinite;
      fill_h(rho);
      return report;
    }
    if (detail::allows_nonnegative(large_sign) && diverging) {
      report.infinity_behavior = InfinityBehavior::ComesDownFromInfinity;
      fill_h(rho);
      return report;
    }
  }
  report.infinity_behavior = InfinityBehavior::Inconclusive;
  fill_h(cfg.rho);
  return report;
}

}  // namespace nlbranch
