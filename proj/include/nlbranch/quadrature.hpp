#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlbranch {

struct QuadResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  std::size_t evaluations = 0;

  QuadResult& operator+=(const QuadResult& other) {
    value += other.value;
    abs_error_estimate += other.abs_error_estimate;
    evaluations += other.evaluations;
    return *this;
  }
};

/// Adaptive quadrature ran out of its evaluation budget.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, QuadResult partial)
      : std::runtime_error(what), partial_(partial) {}
  const QuadResult& partial() const { return partial_; }

 private:
  QuadResult partial_;
};

struct QuadOptions {
  std::size_t max_evaluations = 1'000'000;
  double abs_tol = 0.0;
};

namespace detail {

// 15-point Kronrod nodes with the embedded 7-point Gauss rule (QUADPACK qk15).
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double lo;
  double hi;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod_15(F& f, double lo, double hi) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double tiny = std::numeric_limits<double>::min();
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);

  double fv1[7];
  double fv2[7];
  const double fc = f(center);
  double resg = fc * kGaussWeights[3];
  double resk = fc * kKronrodWeights[7];
  double resabs = std::abs(resk);
  for (int j = 0; j < 3; ++j) {
    const int jtw = 2 * j + 1;
    const double dx = half * kKronrodNodes[jtw];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv1[jtw] = f1;
    fv2[jtw] = f2;
    resg += kGaussWeights[j] * (f1 + f2);
    resk += kKronrodWeights[jtw] * (f1 + f2);
    resabs += kKronrodWeights[jtw] * (std::abs(f1) + std::abs(f2));
  }
  for (int j = 0; j < 4; ++j) {
    const int jtwm1 = 2 * j;
    const double dx = half * kKronrodNodes[jtwm1];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv1[jtwm1] = f1;
    fv2[jtwm1] = f2;
    resk += kKronrodWeights[jtwm1] * (f1 + f2);
    resabs += kKronrodWeights[jtwm1] * (std::abs(f1) + std::abs(f2));
  }
  const double reskh = 0.5 * resk;
  double resasc = kKronrodWeights[7] * std::abs(fc - reskh);
  for (int j = 0; j < 7; ++j) {
    resasc += kKronrodWeights[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
  }
  const double dhalf = std::abs(half);
  resasc *= dhalf;
  resabs *= dhalf;
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  if (resabs > tiny / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  if (!std::isfinite(resk)) err = std::numeric_limits<double>::infinity();
  return Panel{lo, hi, resk * half, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature on [lo, hi].
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate is at most max(tol * |value|, abs_tol), or until every remaining
/// panel is too narrow to split in double precision. Throws ConvergenceError
/// with the partial result once the evaluation budget is spent.
template <class F>
QuadResult integrate_interval(F&& f, double lo, double hi, double tol, QuadOptions opts = {}) {
  if (lo == hi) return QuadResult{0.0, 0.0, 1};
  std::priority_queue<detail::Panel> active;
  std::vector<detail::Panel> frozen;
  std::size_t evaluations = 0;

  auto refinable = [](const detail::Panel& p) {
    const double mid = 0.5 * (p.lo + p.hi);
    const double width = std::abs(p.hi - p.lo);
    const double scale = std::max(std::abs(p.lo), std::abs(p.hi));
    return mid > std::min(p.lo, p.hi) && mid < std::max(p.lo, p.hi) &&
           width > 1e3 * std::numeric_limits<double>::epsilon() * scale;
  };
  auto totals = [&]() {
    QuadResult r;
    auto pq = active;
    while (!pq.empty()) {
      r.value += pq.top().value;
      r.abs_error_estimate += pq.top().error;
      pq.pop();
    }
    for (const auto& p : frozen) {
      r.value += p.value;
      r.abs_error_estimate += p.error;
    }
    r.evaluations = evaluations;
    return r;
  };

  active.push(detail::gauss_kronrod_15(f, lo, hi));
  evaluations += 15;
  double value = active.top().value;
  double error = active.top().error;

  for (;;) {
    if (!(error > std::max(tol * std::abs(value), opts.abs_tol)) || active.empty()) {
      QuadResult exact = totals();
      if (!(exact.abs_error_estimate > std::max(tol * std::abs(exact.value), opts.abs_tol)) ||
          active.empty()) {
        return exact;
      }
      value = exact.value;
      error = exact.abs_error_estimate;
    }
    if (evaluations + 30 > opts.max_evaluations) {
      throw ConvergenceError("adaptive quadrature exceeded its evaluation budget", totals());
    }
    const detail::Panel worst = active.top();
    active.pop();
    if (!refinable(worst)) {
      frozen.push_back(worst);
      continue;
    }
    const double mid = 0.5 * (worst.lo + worst.hi);
    const detail::Panel left = detail::gauss_kronrod_15(f, worst.lo, mid);
    const detail::Panel right = detail::gauss_kronrod_15(f, mid, worst.hi);
    evaluations += 30;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    active.push(left);
    active.push(right);
  }
}

/// Adaptive quadrature on (0, 1).
template <class F>
QuadResult integrate_unit(F&& f, double tol, QuadOptions opts = {}) {
  return integrate_interval(std::forward<F>(f), 0.0, 1.0, tol, opts);
}

/// Range of z that the power substitution below will hand to an integrand.
inline constexpr double kMinMappedAbscissa = 1e-100;
inline constexpr double kMaxMappedAbscissa = 1e100;

/// Integrate f over [lo, hi] (hi may be infinite, lo may be zero) through the
/// substitution w = z^(power + 1).
///
/// `ratio(z)` must return f(z) * z^(-power). When f behaves like z^power at an
/// endpoint, the transformed integrand ratio(z) / |power + 1| stays bounded
/// there. Abscissae are clamped to [kMinMappedAbscissa, kMaxMappedAbscissa],
/// so ratio must have settled to its limit by then.
template <class R>
QuadResult integrate_power_segment(R&& ratio, double power, double lo, double hi, double tol,
                                   QuadOptions opts = {}) {
  const double k = power + 1.0;
  if (k == 0.0) throw std::invalid_argument("integrate_power_segment: power must differ from -1");
  if (!(hi > lo)) return QuadResult{0.0, 0.0, 1};
  auto to_w = [k](double z) {
    if (z == 0.0) return k > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    if (std::isinf(z)) return k > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return std::pow(z, k);
  };
  const double w_a = to_w(lo);
  const double w_b = to_w(hi);
  const double w_lo = std::min(w_a, w_b);
  const double w_hi = std::max(w_a, w_b);
  if (!std::isfinite(w_hi)) {
    throw std::invalid_argument("integrate_power_segment: power does not map the segment to a finite range");
  }
  const double log_min = std::log(kMinMappedAbscissa);
  const double log_max = std::log(kMaxMappedAbscissa);
  const double scale = 1.0 / std::abs(k);
  auto mapped = [&](double w) {
    const double log_z = std::clamp(std::log(w) / k, log_min, log_max);
    return ratio(std::exp(log_z)) * scale;
  };
  return integrate_interval(mapped, w_lo, w_hi, tol, opts);
}

/// Integral over (0, cut] split at z = 1 (cut may be infinite).
///
/// `head_ratio(z) = f(z) z^(-head_power)` on (0, 1] and
/// `tail_ratio(z) = f(z) z^(-tail_power)` on [1, cut]; each piece is mapped to
/// a finite interval by integrate_power_segment.
template <class H, class T>
QuadResult integrate_semiinfinite(H&& head_ratio, double head_power, T&& tail_ratio,
                                  double tail_power, double tol,
                                  double cut = std::numeric_limits<double>::infinity(),
                                  QuadOptions opts = {}) {
  QuadResult total = integrate_power_segment(head_ratio, head_power, 0.0, std::min(1.0, cut), tol, opts);
  if (cut > 1.0) total += integrate_power_segment(tail_ratio, tail_power, 1.0, cut, tol, opts);
  return total;
}

/// Integral of f over (0, inf): the head (0, 1] is integrated directly and the
/// tail [1, inf) through z = 1/w.
template <class F>
QuadResult integrate_semiinfinite(F&& f, double tol, QuadOptions opts = {}) {
  return integrate_semiinfinite(
      f, 0.0, [&f](double z) { return f(z) * z * z; }, -2.0, tol,
      std::numeric_limits<double>::infinity(), opts);
}

}  // namespace nlbranch
