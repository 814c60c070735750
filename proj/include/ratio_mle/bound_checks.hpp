#pragma once

// Empirical verifiers for the quantitative steps of the consistency
// argument: tail envelope, step-function domination, the two-term
// log-likelihood bound, the polynomial bound on sample extremes and the
// short-interval count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ratio_mle/constraints.hpp"
#include "ratio_mle/errors.hpp"
#include "ratio_mle/families.hpp"
#include "ratio_mle/mixture.hpp"
#include "ratio_mle/parallel.hpp"
#include "ratio_mle/report.hpp"
#include "ratio_mle/rng.hpp"

namespace ratio_mle {

inline constexpr double kBoundSlack = 1e-12;
inline constexpr double kCrossoverRelTol = 1e-9;

// standard_pdf(z) <= min{v0, v1 |z|^-beta} on a dense grid of [-50, 50]
// plus `draws` random points (half uniform on [-50, 50], half from the
// family itself stretched by 3).
inline BoundCheckReport check_envelope(Family f, std::size_t draws, std::uint64_t seed,
                                       std::size_t grid_points = 1'000'001) {
  const EnvelopeConstants env = envelope_constants(f);
  BoundCheckReport rep;
  rep.check_id = "envelope:" + std::string(to_string(f));
  rep.seed = seed;
  auto probe = [&](double z) {
    const double envelope =
        z == 0.0 ? env.v0 : std::min(env.v0, env.v1 * std::pow(std::abs(z), -env.beta));
    const double margin = envelope - standard_pdf(f, z);
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (margin < -kBoundSlack) ++rep.violations;
    ++rep.replicates;
  };
  for (std::size_t k = 0; k < grid_points; ++k)
    probe(-50.0 + 100.0 * static_cast<double>(k) / static_cast<double>(grid_points - 1));
  Rng rng(seed);
  for (std::size_t k = 0; k < draws; ++k)
    probe(k % 2 == 0 ? rng.uniform(-50.0, 50.0) : 3.0 * sample_standard(f, rng));
  return rep;
}

// Relative error of (1/sigma) v1 (nu/sigma)^-beta against v0 sigma for
// log-uniform sigma in [1e-6, 1e3].
inline BoundCheckReport check_crossover(Family f, std::size_t draws, std::uint64_t seed) {
  const EnvelopeConstants env = envelope_constants(f);
  BoundCheckReport rep;
  rep.check_id = "crossover:" + std::string(to_string(f));
  rep.seed = seed;
  rep.replicates = draws;
  Rng rng(seed);
  for (std::size_t k = 0; k < draws; ++k) {
    const double sigma = rng.log_uniform(1e-6, 1e3);
    const double w = nu(env, sigma);
    const double tail = env.v1 * std::pow(w / sigma, -env.beta) / sigma;
    const double plateau_meets = env.v0 * sigma;
    const double rel = std::abs(tail - plateau_meets) / plateau_meets;
    rep.worst_margin = std::min(rep.worst_margin, kCrossoverRelTol - rel);
    if (rel > kCrossoverRelTol) ++rep.violations;
  }
  return rep;
}

// scaled density <= step_bound for random (family, x, mu, sigma).
inline BoundCheckReport check_step_bound(std::size_t draws, std::uint64_t seed) {
  BoundCheckReport rep;
  rep.check_id = "step-bound";
  rep.seed = seed;
  rep.replicates = draws;
  Rng rng(seed);
  for (std::size_t k = 0; k < draws; ++k) {
    const Family f = kAllFamilies[rng.index(kAllFamilies.size())];
    const double mu = rng.uniform(-10.0, 10.0);
    const double sigma = rng.log_uniform(1e-6, 1e3);
    // half the points near the plateau edge, half spread over the tails
    const double x = k % 2 == 0 ? mu + nu(f, sigma) * rng.uniform(-3.0, 3.0)
                                : mu + sigma * rng.uniform(-50.0, 50.0);
    const double margin = step_bound(f, x, mu, sigma) - scaled_pdf(f, x, mu, sigma);
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (margin < -kBoundSlack) ++rep.violations;
  }
  return rep;
}

struct LoglikBoundCheck {
  double lhs;  // sum_i log f(x_i; theta)
  double rhs;  // R log(v0 / sigma_(1)) + (n - R) log(v0 sigma_(M))
  double margin;
  std::size_t in_J;
  bool violated;
};

// Requires theta in Theta_{b_n} but outside Theta_{c_n}. With mixed families
// v0 is the largest component v0; J(theta) uses each component's own nu.
inline LoglikBoundCheck check_loglik_bound(const MixtureParams& theta, std::span<const double> data,
                                           const ScheduleValues& sv) {
  if (!in_theta_b(theta, sv.b_n))
    throw validation_error("check_loglik_bound: theta is not in Theta_{b_n}");
  if (in_theta_c(theta, sv.c_n))
    throw validation_error("check_loglik_bound: theta lies in Theta_{c_n}");
  double v0 = 0.0;
  for (const Component& c : theta) v0 = std::max(v0, envelope_constants(c.family).v0);
  const std::size_t R = count_in(interval_set(theta), data);
  const double n = static_cast<double>(data.size());
  const double rhs = static_cast<double>(R) * std::log(v0 / theta.min_sigma()) +
                     (n - static_cast<double>(R)) * std::log(v0 * theta.max_sigma());
  const double lhs = loglik(theta, data);
  const double margin = rhs - lhs;
  // relative slack for the rounding in sums of n terms of size ~|log sigma|
  const double slack = kBoundSlack * std::max(1.0, std::abs(rhs));
  return {lhs, rhs, margin, R, margin < -slack};
}

// How to draw theta from Theta_{b_n} with sigma_(1) < c_n: log sigma_(1)
// uniform on [log sigma_floor, log c_n), the other scales sigma_(1)/r with
// log r uniform on [log b_n, 0], locations uniform on [mu_lo, mu_hi] unless
// centers are supplied, weights flat Dirichlet.
struct ThetaDrawSpec {
  std::vector<Family> families;  // one per component
  ScheduleValues schedule;
  double mu_lo = -1.0;
  double mu_hi = 1.0;
  double sigma_floor = 1e-300;
};

inline MixtureParams draw_theta_outside_c(const ThetaDrawSpec& spec, Rng& rng,
                                          std::span<const double> centers = {}) {
  const std::size_t M = spec.families.size();
  if (M == 0) throw validation_error("draw: at least one component required");
  const double log_floor = std::log(spec.sigma_floor);
  if (!(spec.schedule.log_c_n > log_floor))
    throw validation_error("draw: infeasible parameters, c_n is below sigma_floor");
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double log_s1 = rng.uniform(log_floor, spec.schedule.log_c_n);
    const std::size_t smallest = rng.index(M);
    std::vector<Component> comps(M);
    double total = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      const double log_r = m == smallest ? 0.0 : rng.uniform(std::min(spec.schedule.log_b_n, 0.0), 0.0);
      comps[m].family = spec.families[m];
      comps[m].sigma = std::exp(log_s1 - log_r);
      comps[m].mu = centers.empty() ? rng.uniform(spec.mu_lo, spec.mu_hi) : centers[m % centers.size()];
      comps[m].weight = rng.exponential();
      total += comps[m].weight;
    }
    for (Component& c : comps) c.weight /= total;
    MixtureParams theta(std::move(comps));
    if (in_theta_b(theta, spec.schedule.b_n) && !in_theta_c(theta, spec.schedule.c_n)) return theta;
  }
  throw numeric_error("draw: could not produce a member of Theta_{b_n} outside Theta_{c_n}");
}

struct LoglikSweepConfig {
  MixtureParams theta_0;
  ConstraintSchedule schedule{1.0, 0.3, 0.6};
  std::size_t n = 1000;
  std::size_t draws = 1000;
  std::size_t max_components = 3;
  std::uint64_t seed = 0;
};

// Randomized sweep of check_loglik_bound. Each draw samples a fresh dataset
// from theta_0 and a random theta (mixed families, 1..max_components); odd
// draws centre the components on data points, which makes the bound tightest.
inline BoundCheckReport loglik_bound_sweep(const LoglikSweepConfig& cfg, std::size_t threads = 1) {
  if (cfg.max_components < 1) throw validation_error("loglik_bound.max_components: must be >= 1");
  if (cfg.n < 1) throw validation_error("loglik_bound.n: must be >= 1");
  const ScheduleValues sv = schedule_values(cfg.schedule, cfg.n);
  std::vector<LoglikBoundCheck> results(cfg.draws);
  parallel_for(cfg.draws, threads, [&](std::size_t k) {
    Rng rng(derive_seed(cfg.seed, {cfg.n, k}));
    const auto data = sample(cfg.theta_0, cfg.n, rng);
    ThetaDrawSpec spec;
    spec.schedule = sv;
    const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
    spec.mu_lo = *lo - 1.0;
    spec.mu_hi = *hi + 1.0;
    const std::size_t M = 1 + rng.index(cfg.max_components);
    for (std::size_t m = 0; m < M; ++m)
      spec.families.push_back(kAllFamilies[rng.index(kAllFamilies.size())]);
    std::vector<double> centers;
    if (k % 2 == 1)
      for (std::size_t m = 0; m < M; ++m) centers.push_back(data[rng.index(data.size())]);
    results[k] = check_loglik_bound(draw_theta_outside_c(spec, rng, centers), data, sv);
  });
  BoundCheckReport rep;
  rep.check_id = "loglik-bound";
  rep.n = cfg.n;
  rep.replicates = cfg.draws;
  rep.seed = cfg.seed;
  for (const auto& r : results) {
    rep.worst_margin = std::min(rep.worst_margin, r.margin);
    rep.violations += r.violated;
  }
  return rep;
}

// A_n = A_0 n^((2 + zeta)/(beta - 1))
inline double extremes_envelope(double A_0, double zeta, double beta, std::size_t n) {
  return A_0 * std::pow(static_cast<double>(n), (2.0 + zeta) / (beta - 1.0));
}

inline double min_beta(const MixtureParams& theta) {
  double beta = std::numeric_limits<double>::infinity();
  for (const Component& c : theta) beta = std::min(beta, envelope_constants(c.family).beta);
  return beta;
}

// Counts replicates whose sample minimum falls below -A_n or maximum above
// A_n; one report per sample size.
inline std::vector<BoundCheckReport> check_extremes(const MixtureParams& theta_0, double A_0,
                                                    double zeta, std::span<const std::size_t> n_list,
                                                    std::size_t replicates, std::uint64_t seed,
                                                    std::size_t threads = 1) {
  if (!(A_0 > 0.0)) throw validation_error("extremes.A_0: must be positive");
  if (!(zeta > 0.0)) throw validation_error("extremes.zeta: must be positive");
  const double beta = min_beta(theta_0);
  std::vector<BoundCheckReport> out;
  for (std::size_t n : n_list) {
    if (n == 0) throw validation_error("extremes.n_list: sample sizes must be positive");
    const double A_n = extremes_envelope(A_0, zeta, beta, n);
    std::vector<double> margins(replicates);
    parallel_for(replicates, threads, [&](std::size_t r) {
      const auto data = sample(theta_0, n, derive_seed(seed, {n, r}));
      const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
      margins[r] = std::min(A_n + *lo, A_n - *hi);
    });
    BoundCheckReport rep;
    rep.check_id = "extremes";
    rep.n = n;
    rep.replicates = replicates;
    rep.seed = seed;
    rep.A_0 = A_0;
    rep.zeta = zeta;
    rep.A_n = A_n;
    for (double m : margins) {
      rep.worst_margin = std::min(rep.worst_margin, m);
      rep.violations += m < 0.0;
    }
    out.push_back(rep);
  }
  return out;
}

// u_0 = sup_x f(x; theta_0), approximated on a grid over [lo, hi] plus the
// component locations.
inline double estimate_density_sup(const MixtureParams& theta, double lo, double hi,
                                   std::size_t grid_points = 100'000) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid_points; ++k) {
    const double x = grid_points == 1 ? lo
                                      : lo + (hi - lo) * static_cast<double>(k) /
                                                 static_cast<double>(grid_points - 1);
    best = std::max(best, mixture_logpdf(theta, x));
  }
  for (const Component& c : theta) best = std::max(best, mixture_logpdf(theta, c.mu));
  return std::exp(best);
}

struct IntervalCountConfig {
  MixtureParams theta_0;
  ConstraintSchedule schedule{1.0, 0.3, 0.6};
  std::size_t n = 10'000;
  std::size_t draws = 200;
  std::uint64_t seed = 0;
  bool adversarial = false;
  double A_0 = 10.0;
  double zeta = 1.0;
};

// Samples one dataset from theta_0, then counts R_n(J(theta)) for random
// theta in Theta_{b_n} outside Theta_{c_n}. A draw violates when its count
// exceeds 4M. Adversarial mode centres components on the closest pairs of
// sample points.
inline BoundCheckReport check_interval_count(const IntervalCountConfig& cfg, std::size_t threads = 1) {
  if (cfg.n < 100) throw validation_error("interval_count.n: must be at least 100");
  if (!(cfg.A_0 > 0.0)) throw validation_error("interval_count.A_0: must be positive");
  if (!(cfg.zeta > 0.0)) throw validation_error("interval_count.zeta: must be positive");
  const ScheduleValues sv = schedule_values(cfg.schedule, cfg.n);
  const std::size_t M = cfg.theta_0.size();
  const double A_n = extremes_envelope(cfg.A_0, cfg.zeta, min_beta(cfg.theta_0), cfg.n);

  const auto data = sample(cfg.theta_0, cfg.n, derive_seed(cfg.seed, {cfg.n}));

  std::vector<double> centers;
  if (cfg.adversarial) {
    std::vector<double> sorted = data;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> idx(sorted.size() - 1);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return sorted[a + 1] - sorted[a] < sorted[b + 1] - sorted[b];
    });
    for (std::size_t m = 0; m < M; ++m) centers.push_back(sorted[idx[m]]);
  }

  ThetaDrawSpec spec;
  spec.schedule = sv;
  spec.mu_lo = -A_n;
  spec.mu_hi = A_n;
  for (const Component& c : cfg.theta_0) spec.families.push_back(c.family);

  std::vector<std::size_t> counts(cfg.draws);
  parallel_for(cfg.draws, threads, [&](std::size_t k) {
    Rng rng(derive_seed(cfg.seed, {cfg.n, k, 1}));
    counts[k] = count_in(interval_set(draw_theta_outside_c(spec, rng, centers)), data);
  });

  BoundCheckReport rep;
  rep.check_id = cfg.adversarial ? "interval-count:adversarial" : "interval-count";
  rep.n = cfg.n;
  rep.replicates = cfg.draws;
  rep.seed = cfg.seed;
  rep.A_0 = cfg.A_0;
  rep.zeta = cfg.zeta;
  rep.A_n = A_n;
  const double limit = 4.0 * static_cast<double>(M);
  std::size_t max_count = 0;
  for (std::size_t c : counts) {
    max_count = std::max(max_count, c);
    rep.violations += static_cast<double>(c) > limit;
  }
  rep.max_count = static_cast<double>(max_count);
  rep.worst_margin = limit - rep.max_count;
  double w = 0.0;
  const double ratio = std::exp(sv.log_c_n - sv.log_b_n);  // c_n / b_n
  for (const Component& c : cfg.theta_0) w = std::max(w, nu(c.family, ratio));
  rep.w_n = w;
  rep.k_wn = std::ceil(A_n / w);
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  rep.u_0 = estimate_density_sup(cfg.theta_0, *lo, *hi);
  return rep;
}

} // namespace ratio_mle
