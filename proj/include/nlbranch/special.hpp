#pragma once

#include <cmath>
#include <string>

#include "nlbranch/errors.hpp"

namespace nlbranch {

/// Gamma function for x > 0.
inline double gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("gamma: argument must be finite and positive, got " + std::to_string(x));
  }
  return std::tgamma(x);
}

/// x - log(1 + x), accurate for small |x|. Requires x > -1.
inline double log1p_remainder(double x) {
  if (std::abs(x) < 1e-2) {
    // x^2/2 - x^3/3 + x^4/4 - ...
    double term = x * x;
    double sum = 0.0;
    double sign = 1.0;
    for (int n = 2; n < 12; ++n) {
      sum += sign * term / n;
      term *= x;
      sign = -sign;
    }
    return sum;
  }
  return x - std::log1p(x);
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace nlbranch
