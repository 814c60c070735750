#pragma once

// Test-only reference computations. Written from first principles and kept
// independent of the library code paths they are used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ratio_mle/families.hpp"

namespace oracle {

// Closed-form standard densities written out longhand.
inline double pdf(ratio_mle::Family f, double z) {
  using ratio_mle::Family;
  switch (f) {
    case Family::Normal: return std::exp(-z * z / 2.0) / std::sqrt(2.0 * std::numbers::pi);
    case Family::Laplace: return 0.5 * std::exp(-std::abs(z));
    case Family::Logistic: {
      const double e = std::exp(-z);
      return std::isinf(e) ? 0.0 : e / ((1.0 + e) * (1.0 + e));
    }
    case Family::Uniform: return (z >= -0.5 && z <= 0.5) ? 1.0 : 0.0;
  }
  return 0.0;
}

inline double cdf(ratio_mle::Family f, double z) {
  using ratio_mle::Family;
  switch (f) {
    case Family::Normal: return 0.5 * std::erfc(-z / std::sqrt(2.0));
    case Family::Laplace: return z < 0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
    case Family::Logistic: return 1.0 / (1.0 + std::exp(-z));
    case Family::Uniform: return std::clamp(z + 0.5, 0.0, 1.0);
  }
  return 0.0;
}

// Composite Simpson rule with `panels` (even) subintervals.
inline double simpson(const std::function<double(double)>& g, double lo, double hi, int panels) {
  const double h = (hi - lo) / panels;
  double acc = g(lo) + g(hi);
  for (int k = 1; k < panels; ++k) acc += (k % 2 ? 4.0 : 2.0) * g(lo + k * h);
  return acc * h / 3.0;
}

// Brute-force sup of |z|^beta f(z) on a fine grid over [0, hi].
inline double grid_sup_tail(ratio_mle::Family f, double beta, double hi, int points) {
  double best = 0.0;
  for (int k = 0; k <= points; ++k) {
    const double z = hi * k / points;
    best = std::max(best, std::pow(z, beta) * pdf(f, z));
  }
  return best;
}

// Two-sided Kolmogorov-Smirnov statistic against a continuous CDF.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& F) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double c = F(xs[i]);
    d = std::max({d, (i + 1) / n - c, c - i / n});
  }
  return d;
}

// Per-point membership scan over possibly overlapping closed intervals.
inline std::size_t naive_union_count(const std::vector<std::pair<double, double>>& intervals,
                                     std::span<const double> data) {
  std::size_t count = 0;
  for (double x : data) {
    bool inside = false;
    for (const auto& [lo, hi] : intervals) inside = inside || (x >= lo && x <= hi);
    count += inside;
  }
  return count;
}

} // namespace oracle
