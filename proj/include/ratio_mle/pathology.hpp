#pragma once

// Degenerate likelihood constructions: a component collapsing onto a data
// point makes the unconstrained likelihood unbounded, and a ratio bound
// decaying like exp(-n^r) with r > 1 lets the mean log-likelihood diverge.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ratio_mle/constraints.hpp"
#include "ratio_mle/errors.hpp"
#include "ratio_mle/estimator.hpp"
#include "ratio_mle/families.hpp"
#include "ratio_mle/mixture.hpp"

namespace ratio_mle {

// mu_1 = x_1, sigma_1 = 10^-k, second component Normal(mean, sd) of the
// data, equal weights.
inline MixtureParams spike_theta(std::span<const double> data, int k) {
  if (data.empty()) throw validation_error("spike_theta: data must be nonempty");
  double sd = detail::population_sd(data);
  if (!(sd > 0.0)) sd = 1.0;
  double mean = 0.0;
  for (double x : data) mean += x;
  mean /= static_cast<double>(data.size());
  return MixtureParams({{Family::Normal, 0.5, data[0], std::pow(10.0, -k)},
                        {Family::Normal, 0.5, mean, sd}});
}

struct SpikePoint {
  int k;
  double sigma_1;
  double loglik;
};

inline std::vector<SpikePoint> unbounded_likelihood_demo(std::span<const double> data, int k_max) {
  if (data.empty()) throw validation_error("unbounded_likelihood_demo: data must be nonempty");
  if (k_max < 0) throw validation_error("unbounded_likelihood_demo: k_max must be nonnegative");
  std::vector<SpikePoint> out;
  for (int k = 0; k <= k_max; ++k) {
    const MixtureParams theta = spike_theta(data, k);
    out.push_back({k, theta[0].sigma, loglik(theta, data)});
  }
  return out;
}

// Component given by its log scale, for scales below double range.
struct LogScaleComponent {
  Family family;
  double weight;
  double mu;
  double log_sigma;
};

inline double logscale_mixture_logpdf(std::span<const LogScaleComponent> comps, double x) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double top = kNegInf;
  std::vector<double> terms;
  terms.reserve(comps.size());
  for (const auto& c : comps) {
    if (c.weight <= 0.0) continue;
    const double dx = x - c.mu;
    const double z = dx == 0.0 ? 0.0 : dx * std::exp(-c.log_sigma);
    const double v = std::log(c.weight) + standard_logpdf(c.family, z) - c.log_sigma;
    terms.push_back(v);
    top = std::max(top, v);
  }
  if (top == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : terms) acc += std::exp(v - top);
  return top + std::log(acc);
}

struct DivergenceRow {
  std::size_t n;
  double mean_loglik_pathological;
  double mean_loglik_true;
  double log_b_required;       // log of the ratio the construction needs, -n^r
  bool in_theta_b_required;    // theta in Theta_b with b = exp(-n^r)
  bool in_theta_b_schedule;    // theta in Theta_{b_n} with b_n = b0 exp(-n^d)
  bool sigma_underflow;        // exp(-n^r) is zero in double precision
};

// Per n: sample from theta_0, set mu_1 = x_1 and sigma_1 = exp(-n^r), keep
// the remaining components at (0, 1) in theta_0's families with equal
// weights, and compare mean log-likelihoods. Everything is evaluated in log
// scale, so the spike term log(alpha_1 v0) + n^r stays exact after
// exp(-n^r) underflows.
inline std::vector<DivergenceRow> divergence_demo(const MixtureParams& theta_0, double r,
                                                  std::span<const std::size_t> n_list,
                                                  std::uint64_t seed,
                                                  const ConstraintSchedule& schedule = {}) {
  if (!(r > 0.0)) throw validation_error("divergence.r: must be positive");
  if (theta_0.size() < 2)
    throw validation_error("divergence.theta_0: needs at least two components");
  schedule.validate();
  const std::size_t M = theta_0.size();
  const double w = 1.0 / static_cast<double>(M);
  std::vector<DivergenceRow> out;
  for (std::size_t n : n_list) {
    if (n == 0) throw validation_error("divergence.n_list: sample sizes must be positive");
    const auto data = sample(theta_0, n, derive_seed(seed, {n}));
    const double log_sigma_1 = -std::pow(static_cast<double>(n), r);
    std::vector<LogScaleComponent> comps;
    comps.push_back({theta_0[0].family, w, data[0], log_sigma_1});
    for (std::size_t m = 1; m < M; ++m) comps.push_back({theta_0[m].family, w, 0.0, 0.0});

    double total = 0.0;
    for (double x : data) total += logscale_mixture_logpdf(comps, x);

    std::vector<double> log_sigmas;
    for (const auto& c : comps) log_sigmas.push_back(c.log_sigma);
    const ScheduleValues sv = schedule_values(schedule, n);
    out.push_back({n, total / static_cast<double>(n), loglik(theta_0, data) / static_cast<double>(n),
                   log_sigma_1, in_theta_b_log(log_sigmas, log_sigma_1),
                   in_theta_b_log(log_sigmas, sv.log_b_n), std::exp(log_sigma_1) == 0.0});
  }
  return out;
}

} // namespace ratio_mle
