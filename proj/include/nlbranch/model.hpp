#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nlbranch/quadrature.hpp"
#include "nlbranch/special.hpp"

namespace nlbranch {

/// u -> b * u^r
struct PowerLaw {
  double b = 0.0;
  double r = 0.0;
  bool operator==(const PowerLaw&) const = default;
};

struct Knot {
  double u = 0.0;
  double value = 0.0;
  bool operator==(const Knot&) const = default;
};

/// Piecewise-linear table. Outside [first knot, last knot] the value is held
/// at the nearest end knot, so the function stays bounded on bounded sets.
struct Tabulated {
  std::vector<Knot> knots;
  bool operator==(const Tabulated&) const = default;
};

/// Nonnegative rate function a_i(u).
class RateFunction {
 public:
  RateFunction() = default;
  RateFunction(PowerLaw p) : rep_(p) {}
  RateFunction(Tabulated t) : rep_(std::move(t)) {}

  static RateFunction power(double b, double r) { return RateFunction(PowerLaw{b, r}); }
  static RateFunction zero() { return power(0.0, 0.0); }

  double operator()(double u) const {
    if (const auto* p = std::get_if<PowerLaw>(&rep_)) {
      if (p->b == 0.0) return 0.0;
      if (p->r == 0.0) return p->b;
      if (p->r == 1.0) return p->b * u;
      if (p->r == 2.0) return p->b * u * u;
      if (p->r == 3.0) return p->b * u * u * u;
      return p->b * std::pow(u, p->r);
    }
    const auto& knots = std::get<Tabulated>(rep_).knots;
    if (u <= knots.front().u) return knots.front().value;
    if (u >= knots.back().u) return knots.back().value;
    const auto hi = std::upper_bound(knots.begin(), knots.end(), u,
                                     [](double x, const Knot& k) { return x < k.u; });
    const auto lo = hi - 1;
    const double frac = (u - lo->u) / (hi->u - lo->u);
    return lo->value + frac * (hi->value - lo->value);
  }

  bool is_power_law() const { return std::holds_alternative<PowerLaw>(rep_); }
  const PowerLaw& power_law() const { return std::get<PowerLaw>(rep_); }
  const Tabulated& table() const { return std::get<Tabulated>(rep_); }

  /// True when the function vanishes identically.
  bool is_zero() const {
    if (is_power_law()) return power_law().b == 0.0;
    return std::all_of(table().knots.begin(), table().knots.end(),
                       [](const Knot& k) { return k.value == 0.0; });
  }

  bool operator==(const RateFunction&) const = default;

 private:
  std::variant<PowerLaw, Tabulated> rep_ = PowerLaw{};
};

/// Spectrally positive alpha-stable Levy measure c_alpha z^(-1-alpha) dz,
/// c_alpha = alpha(alpha-1)/Gamma(2-alpha), restricted to U = (0, support_cut]
/// (U = (0, inf) when support_cut is empty).
struct StableMeasure {
  double alpha = 1.5;
  std::optional<double> support_cut;

  double c_alpha() const { return alpha * (alpha - 1.0) / gamma(2.0 - alpha); }
  double cut() const { return support_cut.value_or(std::numeric_limits<double>::infinity()); }
  bool contains(double z) const { return z > 0.0 && z <= cut(); }
  double density(double z) const { return contains(z) ? c_alpha() * std::pow(z, -1.0 - alpha) : 0.0; }

  /// Integral of g against the measure over U.
  ///
  /// g must be O(z^2) at 0 and O(z) at infinity (up to logarithms); the head
  /// is integrated in w = z^(2-alpha) and the tail in w = z^(1-alpha), which
  /// absorbs both power singularities of the density.
  template <class G>
  QuadResult integrate(G&& g, double tol, QuadOptions opts = {}) const {
    const double c = c_alpha();
    return integrate_semiinfinite([&](double z) { return c * g(z) / (z * z); }, 1.0 - alpha,
                                  [&](double z) { return c * g(z) / z; }, -alpha, tol, cut(), opts);
  }

  bool operator==(const StableMeasure&) const = default;
};

struct Atom {
  double z = 0.0;
  double weight = 0.0;
  bool operator==(const Atom&) const = default;
};

/// Finite jump measure nu supported off U, given by its atoms.
struct FiniteMeasure {
  std::vector<Atom> atoms;

  double total_mass() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.weight;
    return m;
  }
  bool empty() const { return atoms.empty(); }
  bool operator==(const FiniteMeasure&) const = default;
};

struct ModelSpec {
  RateFunction a0;
  RateFunction a1;
  RateFunction a2;
  RateFunction a3;
  StableMeasure mu;
  FiniteMeasure nu;
  bool operator==(const ModelSpec&) const = default;
};

enum class ModelErrc {
  alpha_out_of_range,
  negative_coefficient,
  negative_exponent,
  non_finite_parameter,
  zero_drift_coefficient,
  atom_inside_support,
  invalid_atom,
  invalid_table,
  invalid_support_cut,
  unsupported,
};

inline const char* to_string(ModelErrc code) {
  switch (code) {
    case ModelErrc::alpha_out_of_range: return "alpha out of range";
    case ModelErrc::negative_coefficient: return "negative rate coefficient";
    case ModelErrc::negative_exponent: return "negative rate exponent";
    case ModelErrc::non_finite_parameter: return "non-finite parameter";
    case ModelErrc::zero_drift_coefficient: return "drift coefficient b0 must be positive";
    case ModelErrc::atom_inside_support: return "atom inside U";
    case ModelErrc::invalid_atom: return "invalid atom";
    case ModelErrc::invalid_table: return "invalid rate table";
    case ModelErrc::invalid_support_cut: return "invalid support cut";
    case ModelErrc::unsupported: return "unsupported model form";
  }
  return "unknown model error";
}

class ModelError : public std::invalid_argument {
 public:
  ModelError(ModelErrc code, const std::string& detail)
      : std::invalid_argument(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
        code_(code) {}
  ModelErrc code() const { return code_; }

 private:
  ModelErrc code_;
};

class ValidatedModel;
ValidatedModel validate(ModelSpec spec);

/// A ModelSpec that has passed validate(). Immutable.
class ValidatedModel {
 public:
  const ModelSpec& spec() const { return spec_; }
  double a0(double u) const { return spec_.a0(u); }
  double a1(double u) const { return spec_.a1(u); }
  double a2(double u) const { return spec_.a2(u); }
  double a3(double u) const { return spec_.a3(u); }
  const StableMeasure& mu() const { return spec_.mu; }
  const FiniteMeasure& nu() const { return spec_.nu; }

  /// a0, a1, a2 power laws, U = (0, inf) and nu empty.
  bool is_pure_power_law() const {
    return spec_.a0.is_power_law() && spec_.a1.is_power_law() && spec_.a2.is_power_law() &&
           !spec_.mu.support_cut && spec_.nu.empty();
  }

  bool operator==(const ValidatedModel&) const = default;

 private:
  explicit ValidatedModel(ModelSpec spec) : spec_(std::move(spec)) {}
  friend ValidatedModel validate(ModelSpec spec);
  ModelSpec spec_;
};

namespace detail {

inline void check_rate(const RateFunction& f, const char* name) {
  if (f.is_power_law()) {
    const auto& p = f.power_law();
    if (!std::isfinite(p.b) || !std::isfinite(p.r)) {
      throw ModelError(ModelErrc::non_finite_parameter, name);
    }
    if (p.b < 0.0) throw ModelError(ModelErrc::negative_coefficient, name);
    if (p.r < 0.0) throw ModelError(ModelErrc::negative_exponent, name);
    return;
  }
  const auto& knots = f.table().knots;
  if (knots.empty()) throw ModelError(ModelErrc::invalid_table, std::string(name) + " has no knots");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i].u) || !std::isfinite(knots[i].value)) {
      throw ModelError(ModelErrc::non_finite_parameter, name);
    }
    if (knots[i].u < 0.0) throw ModelError(ModelErrc::invalid_table, std::string(name) + " has a negative abscissa");
    if (knots[i].value < 0.0) throw ModelError(ModelErrc::negative_coefficient, name);
    if (i > 0 && !(knots[i].u > knots[i - 1].u)) {
      throw ModelError(ModelErrc::invalid_table, std::string(name) + " knots must be strictly increasing");
    }
  }
}

}  // namespace detail

/// Check every structural assumption of the model and tag it valid.
inline ValidatedModel validate(ModelSpec spec) {
  const double alpha = spec.mu.alpha;
  if (!std::isfinite(alpha)) throw ModelError(ModelErrc::non_finite_parameter, "alpha");
  if (!(alpha > 1.0 && alpha < 2.0)) {
    throw ModelError(ModelErrc::alpha_out_of_range, "alpha = " + std::to_string(alpha) + " not in (1, 2)");
  }
  if (spec.mu.support_cut && !(*spec.mu.support_cut > 0.0 && std::isfinite(*spec.mu.support_cut))) {
    throw ModelError(ModelErrc::invalid_support_cut, "u_max must be finite and positive");
  }
  detail::check_rate(spec.a0, "a0");
  detail::check_rate(spec.a1, "a1");
  detail::check_rate(spec.a2, "a2");
  detail::check_rate(spec.a3, "a3");
  if (spec.a0.is_power_law() && !(spec.a0.power_law().b > 0.0)) {
    throw ModelError(ModelErrc::zero_drift_coefficient, "");
  }
  for (const auto& atom : spec.nu.atoms) {
    if (!std::isfinite(atom.z) || !std::isfinite(atom.weight)) {
      throw ModelError(ModelErrc::non_finite_parameter, "nu atom");
    }
    if (!(atom.z > 0.0) || !(atom.weight > 0.0)) {
      throw ModelError(ModelErrc::invalid_atom, "atoms need z > 0 and weight > 0");
    }
    if (spec.mu.contains(atom.z)) {
      throw ModelError(ModelErrc::atom_inside_support, "z = " + std::to_string(atom.z));
    }
  }
  return ValidatedModel(std::move(spec));
}

/// Distance of a power-law model from the critical manifold
/// b0 = b1/2 + Gamma(alpha) b2, r1 = r0 + 1 (b1 > 0), r2 = r0 + alpha - 1 (b2 > 0).
struct CriticalityCheck {
  double coefficient_deficit = 0.0;
  std::optional<double> r1_residual;
  std::optional<double> r2_residual;
  bool is_critical = false;
};

inline constexpr double kCriticalityTolerance = 1e-12;

inline CriticalityCheck critical_deficit(const ValidatedModel& model) {
  if (!model.is_pure_power_law()) {
    throw ModelError(ModelErrc::unsupported, "criticality needs power-law a0..a2, U = (0, inf) and empty nu");
  }
  const auto& s = model.spec();
  const PowerLaw p0 = s.a0.power_law();
  const PowerLaw p1 = s.a1.power_law();
  const PowerLaw p2 = s.a2.power_law();
  const double g = gamma(s.mu.alpha);

  CriticalityCheck out;
  out.coefficient_deficit = p0.b - 0.5 * p1.b - g * p2.b;
  if (p1.b > 0.0) out.r1_residual = p1.r - (p0.r + 1.0);
  if (p2.b > 0.0) out.r2_residual = p2.r - (p0.r + s.mu.alpha - 1.0);

  // The coefficient test is relative so that rescaling time preserves it.
  const double scale = std::max({p0.b, 0.5 * p1.b, g * p2.b});
  const bool coeff_ok = std::abs(out.coefficient_deficit) <= kCriticalityTolerance * scale;
  const bool r1_ok = !out.r1_residual || std::abs(*out.r1_residual) <= kCriticalityTolerance;
  const bool r2_ok = !out.r2_residual || std::abs(*out.r2_residual) <= kCriticalityTolerance;
  out.is_critical = coeff_ok && r1_ok && r2_ok;
  return out;
}

/// Convenience constructor for the power-law family with U = (0, inf).
inline ModelSpec power_law_model(double alpha, double b0, double r0, double b1, double r1, double b2,
                                 double r2) {
  ModelSpec spec;
  spec.a0 = RateFunction::power(b0, r0);
  spec.a1 = RateFunction::power(b1, r1);
  spec.a2 = RateFunction::power(b2, r2);
  spec.a3 = RateFunction::zero();
  spec.mu.alpha = alpha;
  return spec;
}

}  // namespace nlbranch
