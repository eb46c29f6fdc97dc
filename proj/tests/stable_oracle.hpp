#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "nlbranch/rng.hpp"

namespace oracle {

/// Totally skewed (beta = 1) alpha-stable variate by the Chambers-Mallows-Stuck
/// method, scaled so that E exp(-lambda X) = exp(lambda^alpha), 1 < alpha < 2.
inline double one_sided_stable(nlbranch::RngStream& rng, double alpha) {
  const double pi = std::numbers::pi;
  const double t = std::tan(pi * alpha / 2.0);
  const double b = std::atan(t) / alpha;
  const double s = std::pow(1.0 + t * t, 1.0 / (2.0 * alpha));
  const double v = pi * (rng.next_uniform() - 0.5);
  const double w = -std::log(rng.next_uniform());
  const double x = s * std::sin(alpha * (v + b)) / std::pow(std::cos(v), 1.0 / alpha) *
                   std::pow(std::cos(v - alpha * (v + b)) / w, (1.0 - alpha) / alpha);
  const double sigma = std::pow(std::abs(std::cos(pi * alpha / 2.0)), 1.0 / alpha);
  return sigma * x;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace oracle
