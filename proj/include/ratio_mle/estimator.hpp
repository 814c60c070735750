#pragma once

// Constrained maximum likelihood over Theta_b by multi-start EM, with the
// scales projected back into Theta_b after every M-step.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ratio_mle/constraints.hpp"
#include "ratio_mle/errors.hpp"
#include "ratio_mle/families.hpp"
#include "ratio_mle/mixture.hpp"
#include "ratio_mle/rng.hpp"

namespace ratio_mle {

enum class InitStrategy { QuantileSpread, RandomJitter, Adversarial };

inline std::string_view to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::QuantileSpread: return "quantile";
    case InitStrategy::RandomJitter: return "jitter";
    case InitStrategy::Adversarial: return "adversarial";
  }
  return "?";
}

inline InitStrategy init_strategy_from_string(std::string_view name) {
  for (InitStrategy s : {InitStrategy::QuantileSpread, InitStrategy::RandomJitter,
                         InitStrategy::Adversarial})
    if (to_string(s) == name) return s;
  throw validation_error("unknown init strategy \"" + std::string(name) +
                         "\" (expected quantile, jitter or adversarial)");
}

struct FitConfig {
  std::size_t components = 1;
  double b = 0.5;  // ratio bound, normally schedule_values(...).b_n
  std::size_t restarts = 10;
  std::size_t max_iters = 500;
  double rel_tol = 1e-8;
  InitStrategy init = InitStrategy::QuantileSpread;
  std::uint64_t seed = 0;
  Family family = Family::Normal;
  double guard_floor = kDefaultGuardFloor;

  void validate() const {
    if (components < 1) throw validation_error("fit.components: must be at least 1");
    if (!(b > 0.0 && b < 1.0)) throw validation_error("fit.b: must lie in (0, 1)");
    if (restarts < 1) throw validation_error("fit.restarts: must be at least 1");
    if (max_iters < 1) throw validation_error("fit.max_iters: must be at least 1");
    if (!(rel_tol > 0.0)) throw validation_error("fit.rel_tol: must be positive");
    if (!(guard_floor > 0.0)) throw validation_error("fit.guard_floor: must be positive");
    if (family == Family::Uniform)
      throw validation_error("fit.family: uniform components cannot be fitted by EM");
  }
};

struct StartReport {
  std::size_t iterations = 0;
  bool converged = false;
  bool aborted = false;
  std::string abort_reason;
  double loglik = -std::numeric_limits<double>::infinity();
  std::size_t projection_activations = 0;
  bool guard_floor_hit = false;
};

struct FitResult {
  MixtureParams theta_hat;
  double loglik;
  double b;
  std::vector<StartReport> starts;
  std::size_t best_start_index = 0;
  bool converged = false;              // the winning start converged
  std::size_t projection_activations = 0;  // summed over all starts
  bool guard_floor_hit = false;            // in any start
};

namespace detail {

struct EStep {
  std::vector<double> resp;  // n x M, row major
  double loglik = 0.0;
};

inline EStep e_step(const MixtureParams& theta, std::span<const double> data) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const std::size_t M = theta.size();
  EStep out;
  out.resp.assign(data.size() * M, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    double* row = out.resp.data() + i * M;
    double top = kNegInf;
    for (std::size_t m = 0; m < M; ++m) {
      row[m] = theta[m].weight > 0.0 ? component_logpdf(theta[m], data[i]) : kNegInf;
      top = std::max(top, row[m]);
    }
    if (top == kNegInf)
      throw degenerate_responsibilities("observation " + std::to_string(i) +
                                        " has zero density under every component");
    double acc = 0.0;
    for (std::size_t m = 0; m < M; ++m) acc += (row[m] = std::exp(row[m] - top));
    for (std::size_t m = 0; m < M; ++m) row[m] /= acc;
    out.loglik += top + std::log(acc);
  }
  return out;
}

inline double weighted_median(std::span<const double> data, std::span<const std::size_t> order,
                              const double* resp, std::size_t stride, double total) {
  double acc = 0.0;
  for (std::size_t idx : order) {
    acc += resp[idx * stride];
    if (acc >= 0.5 * total) return data[idx];
  }
  return data[order.back()];
}

// Weighted logistic location/scale by Fisher scoring with step halving, so
// the weighted log-likelihood never decreases.
inline void logistic_update(std::span<const double> data, const double* resp, std::size_t stride,
                            double total, double& mu, double& s) {
  auto objective = [&](double m, double sc) {
    double q = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = resp[i * stride];
      if (g > 0.0) q += g * (standard_logpdf(Family::Logistic, (data[i] - m) / sc) - std::log(sc));
    }
    return q;
  };
  constexpr double kInfoScale = (std::numbers::pi * std::numbers::pi + 3.0) / 9.0;
  double q = objective(mu, s);
  for (int iter = 0; iter < 5; ++iter) {
    double score_mu = 0.0;
    double score_s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = resp[i * stride];
      if (g <= 0.0) continue;
      const double z = (data[i] - mu) / s;
      const double t = std::tanh(0.5 * z);
      score_mu += g * t;
      score_s += g * (z * t - 1.0);
    }
    // expected information per unit weight: 1/(3 s^2) and (pi^2 + 3)/(9 s^2)
    const double step_mu = 3.0 * s * score_mu / total;
    const double step_s = s * score_s / (kInfoScale * total);
    double lambda = 1.0;
    bool moved = false;
    for (int h = 0; h < 30; ++h, lambda *= 0.5) {
      const double m_new = mu + lambda * step_mu;
      const double s_new = s + lambda * step_s;
      if (!(s_new > 0.0)) continue;
      const double q_new = objective(m_new, s_new);
      if (q_new >= q) {
        mu = m_new;
        s = s_new;
        q = q_new;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
}

inline MixtureParams m_step(const MixtureParams& theta, std::span<const double> data,
                            std::span<const std::size_t> order, const std::vector<double>& resp) {
  const std::size_t M = theta.size();
  const std::size_t n = data.size();
  std::vector<double> mass(M, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t m = 0; m < M; ++m) mass[m] += resp[i * M + m];
  const double total_mass = std::accumulate(mass.begin(), mass.end(), 0.0);

  std::vector<Component> out(theta.begin(), theta.end());
  for (std::size_t m = 0; m < M; ++m) {
    Component& c = out[m];
    c.weight = mass[m] / total_mass;
    if (!(mass[m] > 0.0)) continue;  // empty component keeps its location and scale
    const double* r = resp.data() + m;
    switch (c.family) {
      case Family::Normal: {
        double sx = 0.0;
        for (std::size_t i = 0; i < n; ++i) sx += r[i * M] * data[i];
        const double mean = sx / mass[m];
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double dx = data[i] - mean;
          ss += r[i * M] * dx * dx;
        }
        c.mu = mean;
        c.sigma = std::sqrt(ss / mass[m]);
        break;
      }
      case Family::Laplace: {
        const double med = weighted_median(data, order, r, M, mass[m]);
        double sa = 0.0;
        for (std::size_t i = 0; i < n; ++i) sa += r[i * M] * std::abs(data[i] - med);
        c.mu = med;
        c.sigma = sa / mass[m];
        break;
      }
      case Family::Logistic:
        logistic_update(data, r, M, mass[m], c.mu, c.sigma);
        break;
      case Family::Uniform:
        throw validation_error("em_step: uniform components cannot be fitted by EM");
    }
    // A component collapsed onto a single value; the projection lifts it.
    if (!(c.sigma > 0.0) || !std::isfinite(c.sigma)) c.sigma = std::numeric_limits<double>::min();
  }
  return MixtureParams(std::move(out));
}

inline std::vector<std::size_t> sort_order(std::span<const double> data) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data[a] < data[b]; });
  return order;
}

inline double population_sd(std::span<const double> data) {
  const double n = static_cast<double>(data.size());
  const double mean = std::accumulate(data.begin(), data.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : data) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / n);
}

// Linear-interpolated quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline MixtureParams initial_params(std::span<const double> data, const FitConfig& cfg,
                                    std::size_t start) {
  const std::size_t M = cfg.components;
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  double sd = population_sd(data);
  if (!(sd > 0.0)) sd = 1.0;

  std::vector<Component> comps(M);
  for (std::size_t m = 0; m < M; ++m) {
    const double p = (static_cast<double>(m) + 0.5) / static_cast<double>(M);
    comps[m] = {cfg.family, 1.0 / static_cast<double>(M), quantile_sorted(sorted, p),
                sd / static_cast<double>(M)};
  }

  const bool jitter = cfg.init == InitStrategy::RandomJitter ||
                      (cfg.init == InitStrategy::QuantileSpread && start > 0);
  Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(start)}));
  if (jitter) {
    double total = 0.0;
    for (Component& c : comps) {
      c.mu = data[rng.index(data.size())] + 0.25 * c.sigma * rng.normal();
      c.sigma *= std::exp(rng.uniform(-1.5, 1.0));
      c.weight = 0.5 + rng.exponential();
      total += c.weight;
    }
    for (Component& c : comps) c.weight /= total;
  } else if (cfg.init == InitStrategy::Adversarial) {
    Component& c = comps[rng.index(M)];
    c.mu = data[rng.index(data.size())];
    c.sigma = cfg.b * sd;
  }
  return MixtureParams(std::move(comps));
}

inline bool converged_step(double prev, double cur, double rel_tol) {
  return std::abs(cur - prev) < rel_tol * std::max(std::abs(prev), 1.0);
}

} // namespace detail

// One unconstrained EM iteration (E-step, then family-specific M-step).
inline MixtureParams em_step(const MixtureParams& theta, std::span<const double> data) {
  if (data.empty()) throw validation_error("em_step: data must be nonempty");
  for (const Component& c : theta)
    if (c.family == Family::Uniform)
      throw validation_error("em_step: uniform components cannot be fitted by EM");
  const auto e = detail::e_step(theta, data);
  const auto order = detail::sort_order(data);
  return detail::m_step(theta, data, order, e.resp);
}

inline FitResult fit_constrained(std::span<const double> data, const FitConfig& cfg) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  cfg.validate();
  if (data.size() < cfg.components)
    throw validation_error("fit: need at least as many observations as components");
  for (double x : data)
    if (!std::isfinite(x)) throw validation_error("fit: data contains a non-finite value");

  const auto order = detail::sort_order(data);
  std::vector<StartReport> reports(cfg.restarts);
  std::vector<MixtureParams> bests;
  bests.reserve(cfg.restarts);

  for (std::size_t start = 0; start < cfg.restarts; ++start) {
    StartReport& rep = reports[start];
    auto proj = project_scales_tracked(detail::initial_params(data, cfg, start), cfg.b,
                                       cfg.guard_floor);
    rep.projection_activations += proj.active;
    rep.guard_floor_hit |= proj.guard_hit;
    MixtureParams theta = std::move(proj.theta);
    MixtureParams best = theta;
    double best_ll = kNegInf;
    double prev = kNegInf;
    bool evaluated_last = false;
    try {
      for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        const auto e = detail::e_step(theta, data);
        evaluated_last = true;
        if (e.loglik > best_ll) {
          best_ll = e.loglik;
          best = theta;
        }
        if (it > 0 && detail::converged_step(prev, e.loglik, cfg.rel_tol)) {
          rep.converged = true;
          break;
        }
        prev = e.loglik;
        auto next = project_scales_tracked(detail::m_step(theta, data, order, e.resp), cfg.b,
                                           cfg.guard_floor);
        rep.projection_activations += next.active;
        rep.guard_floor_hit |= next.guard_hit;
        theta = std::move(next.theta);
        evaluated_last = false;
        ++rep.iterations;
      }
      if (!evaluated_last) {
        const double ll = loglik(theta, data);
        if (ll > best_ll) {
          best_ll = ll;
          best = theta;
        }
      }
    } catch (const degenerate_responsibilities& ex) {
      rep.aborted = true;
      rep.abort_reason = ex.what();
    }
    if (!rep.aborted) rep.loglik = loglik(best, data);
    bests.push_back(std::move(best));
  }

  std::size_t winner = cfg.restarts;
  for (std::size_t s = 0; s < cfg.restarts; ++s) {
    if (reports[s].aborted) continue;
    if (winner == cfg.restarts || reports[s].loglik > reports[winner].loglik) winner = s;
  }
  if (winner == cfg.restarts) throw numeric_error("fit: every start was aborted");

  FitResult result{bests[winner], reports[winner].loglik, cfg.b, std::move(reports), winner};
  result.converged = result.starts[winner].converged;
  for (const StartReport& r : result.starts) {
    result.projection_activations += r.projection_activations;
    result.guard_floor_hit |= r.guard_floor_hit;
  }
  return result;
}

// Exhaustive search over a product grid restricted to Theta_b; an
// independent check on fit_constrained for tiny instances. Cost is the full
// grid product times n log-density evaluations.
struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t count = 1;

  double at(std::size_t k) const {
    if (count == 1) return 0.5 * (lo + hi);
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
};

// alpha_count interior weights k/(alpha_count + 1); mu and log10(sigma)
// linearly spaced, shared by both components.
struct GridSpec {
  std::size_t alpha_count = 9;
  GridAxis mu{-5.0, 5.0, 21};
  GridAxis sigma_log10{-2.0, 1.0, 21};
};

inline constexpr double kGridPointLimit = 1e8;

struct GridOracleResult {
  MixtureParams theta_best;
  double loglik_best;
  std::uint64_t grid_points;
  std::uint64_t feasible_points;
};

inline double grid_size(const GridSpec& spec, std::size_t M) {
  const double cell = static_cast<double>(spec.mu.count) * static_cast<double>(spec.sigma_log10.count);
  return M == 1 ? cell : static_cast<double>(spec.alpha_count) * cell * cell;
}

inline GridOracleResult grid_oracle(std::span<const double> data, std::size_t M, double b,
                                    const GridSpec& spec, Family family = Family::Normal) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (data.empty() || data.size() > 30) throw validation_error("grid_oracle: requires 1 <= n <= 30");
  if (M < 1 || M > 2) throw validation_error("grid_oracle: requires M in {1, 2}");
  if (spec.mu.count < 1 || spec.sigma_log10.count < 1 || (M == 2 && spec.alpha_count < 1))
    throw validation_error("grid_oracle: every axis needs at least one point");
  if (grid_size(spec, M) > kGridPointLimit)
    throw validation_error("grid_oracle: grid exceeds 1e8 points");

  const std::size_t n = data.size();
  const std::size_t K_mu = spec.mu.count;
  const std::size_t K_s = spec.sigma_log10.count;
  std::vector<double> sig(K_s);
  for (std::size_t s = 0; s < K_s; ++s) sig[s] = std::pow(10.0, spec.sigma_log10.at(s));

  // table[(j * K_s + s) * n + i] = log density of (mu_j, sigma_s) at x_i
  std::vector<double> table(K_mu * K_s * n);
  for (std::size_t j = 0; j < K_mu; ++j)
    for (std::size_t s = 0; s < K_s; ++s)
      for (std::size_t i = 0; i < n; ++i)
        table[(j * K_s + s) * n + i] =
            standard_logpdf(family, (data[i] - spec.mu.at(j)) / sig[s]) - std::log(sig[s]);

  double best = kNegInf;
  std::vector<Component> best_comps;
  std::uint64_t feasible = 0;

  if (M == 1) {
    for (std::size_t j = 0; j < K_mu; ++j)
      for (std::size_t s = 0; s < K_s; ++s) {
        ++feasible;
        const double* row = &table[(j * K_s + s) * n];
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) ll += row[i];
        if (ll > best || best_comps.empty()) {
          best = ll;
          best_comps = {{family, 1.0, spec.mu.at(j), sig[s]}};
        }
      }
    return {MixtureParams(best_comps), best, static_cast<std::uint64_t>(grid_size(spec, M)),
            feasible};
  }

  for (std::size_t a = 0; a < spec.alpha_count; ++a) {
    const double alpha = static_cast<double>(a + 1) / static_cast<double>(spec.alpha_count + 1);
    const double la = std::log(alpha);
    const double lb = std::log1p(-alpha);
    for (std::size_t j1 = 0; j1 < K_mu; ++j1)
      for (std::size_t s1 = 0; s1 < K_s; ++s1) {
        const double* r1 = &table[(j1 * K_s + s1) * n];
        for (std::size_t j2 = 0; j2 < K_mu; ++j2)
          for (std::size_t s2 = 0; s2 < K_s; ++s2) {
            if (std::min(sig[s1], sig[s2]) < b * std::max(sig[s1], sig[s2])) continue;
            ++feasible;
            const double* r2 = &table[(j2 * K_s + s2) * n];
            double ll = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
              const double u = la + r1[i];
              const double v = lb + r2[i];
              const double hi = std::max(u, v);
              ll += hi == kNegInf ? kNegInf : hi + std::log1p(std::exp(std::min(u, v) - hi));
            }
            if (ll > best) {
              best = ll;
              best_comps = {{family, alpha, spec.mu.at(j1), sig[s1]},
                            {family, 1.0 - alpha, spec.mu.at(j2), sig[s2]}};
            }
          }
      }
  }
  if (best_comps.empty()) throw numeric_error("grid_oracle: no feasible grid point");
  return {MixtureParams(best_comps), best, static_cast<std::uint64_t>(grid_size(spec, M)),
          feasible};
}

} // namespace ratio_mle
