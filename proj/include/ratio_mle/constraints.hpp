#pragma once

// Scale-ratio constraint sets, their sample-size schedules and the
// interval union J(theta) used by the likelihood bounds.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "ratio_mle/errors.hpp"
#include "ratio_mle/families.hpp"
#include "ratio_mle/mixture.hpp"

namespace ratio_mle {

// b_n = b0 exp(-n^d) bounds scale ratios; c_n = exp(-n^d') bounds scales
// themselves and only partitions the ratio-constrained set.
struct ConstraintSchedule {
  double b0 = 1.0;
  double d = 0.5;
  double d_prime = 0.75;

  void validate() const {
    if (!(b0 > 0.0) || !std::isfinite(b0)) throw validation_error("schedule.b0: must be positive");
    if (!(d > 0.0 && d < 1.0)) throw validation_error("schedule.d: must lie in (0, 1)");
    if (!(d_prime > d && d_prime < 1.0))
      throw validation_error("schedule.d_prime: must lie in (d, 1)");
  }
};

struct ScheduleValues {
  double b_n;
  double c_n;
  double log_b_n;
  double log_c_n;
};

inline ScheduleValues schedule_values(const ConstraintSchedule& sched, std::size_t n) {
  sched.validate();
  if (n == 0) throw validation_error("schedule_values: n must be at least 1");
  const double nn = static_cast<double>(n);
  const double log_b = std::log(sched.b0) - std::pow(nn, sched.d);
  const double log_c = -std::pow(nn, sched.d_prime);
  return {std::exp(log_b), std::exp(log_c), log_b, log_c};
}

// Pairwise ratio condition min_{m != m'} sigma_m / sigma_m' >= b, reduced to
// sigma_(1) >= b sigma_(M). Multiplying instead of dividing keeps the outputs
// of project_scales exactly on the boundary.
inline bool in_theta_b(const MixtureParams& theta, double b) {
  if (theta.size() < 2) return true;
  return theta.min_sigma() >= b * theta.max_sigma();
}

// Same test on log scales, for scales that underflow double precision.
inline bool in_theta_b_log(std::span<const double> log_sigmas, double log_b) {
  if (log_sigmas.size() < 2) return true;
  const auto [lo, hi] = std::minmax_element(log_sigmas.begin(), log_sigmas.end());
  return *lo - *hi >= log_b;
}

inline bool in_theta_c(const MixtureParams& theta, double c) { return theta.min_sigma() >= c; }

// Lower bound on scales applied during estimation. Sits below every
// b_n * sigma_(M) reached by the shipped experiments.
inline constexpr double kDefaultGuardFloor = 1e-300;

struct ProjectionOutcome {
  MixtureParams theta;
  bool active = false;     // some scale was raised
  bool guard_hit = false;  // the guard floor, not the ratio, was binding
};

// sigma'_m = max(sigma_m, b sigma_(M), guard_floor).
inline ProjectionOutcome project_scales_tracked(const MixtureParams& theta, double b,
                                                double guard_floor = kDefaultGuardFloor) {
  const double ratio_floor = b * theta.max_sigma();
  std::vector<double> sigmas;
  sigmas.reserve(theta.size());
  bool active = false;
  bool guard = false;
  for (const Component& c : theta) {
    double s = c.sigma;
    if (s < ratio_floor) {
      s = ratio_floor;
      active = true;
    }
    if (s < guard_floor) {
      s = guard_floor;
      active = true;
      guard = true;
    }
    sigmas.push_back(s);
  }
  if (!active) return {theta, false, false};
  return {theta.with_sigmas(sigmas), active, guard};
}

inline MixtureParams project_scales(const MixtureParams& theta, double b,
                                    double guard_floor = kDefaultGuardFloor) {
  return project_scales_tracked(theta, b, guard_floor).theta;
}

struct Interval {
  double lo;
  double hi;
};

// J(theta): one closed interval [mu_m - nu(sigma_m), mu_m + nu(sigma_m)] per
// component, using that component's own envelope constants.
struct IntervalSet {
  std::vector<Interval> intervals;
};

inline IntervalSet interval_set(const MixtureParams& theta) {
  IntervalSet out;
  out.intervals.reserve(theta.size());
  for (const Component& c : theta) {
    const double half = nu(c.family, c.sigma);
    out.intervals.push_back({c.mu - half, c.mu + half});
  }
  return out;
}

// R_n(J): number of points in the union, each point counted once.
inline std::size_t count_in(const IntervalSet& set, std::span<const double> data) {
  std::vector<Interval> merged = set.intervals;
  std::sort(merged.begin(), merged.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::size_t w = 0;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    if (w > 0 && merged[i].lo <= merged[w - 1].hi)
      merged[w - 1].hi = std::max(merged[w - 1].hi, merged[i].hi);
    else
      merged[w++] = merged[i];
  }
  merged.resize(w);

  std::size_t count = 0;
  for (double x : data) {
    // last interval with lo <= x
    auto it = std::upper_bound(merged.begin(), merged.end(), x,
                               [](double v, const Interval& iv) { return v < iv.lo; });
    if (it != merged.begin() && x <= std::prev(it)->hi) ++count;
  }
  return count;
}

// Sufficient condition for the true density to need all M components:
// every weight exceeds tol and no two components coincide within tol.
inline bool is_genuinely_M_components(const MixtureParams& theta, double tol) {
  for (const Component& c : theta)
    if (!(c.weight > tol)) return false;
  for (std::size_t a = 0; a < theta.size(); ++a)
    for (std::size_t b = a + 1; b < theta.size(); ++b) {
      const Component& p = theta[a];
      const Component& q = theta[b];
      if (p.family == q.family && std::abs(p.mu - q.mu) <= tol &&
          std::abs(p.sigma - q.sigma) <= tol)
        return false;
    }
  return true;
}

} // namespace ratio_mle
