#pragma once

// Monte Carlo consistency experiment: sample from theta_0 at each n, fit
// over Theta_{b_n}, and record the orbit distance to theta_0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ratio_mle/constraints.hpp"
#include "ratio_mle/distance.hpp"
#include "ratio_mle/errors.hpp"
#include "ratio_mle/estimator.hpp"
#include "ratio_mle/mixture.hpp"
#include "ratio_mle/parallel.hpp"
#include "ratio_mle/report.hpp"
#include "ratio_mle/rng.hpp"

namespace ratio_mle {

inline constexpr double kGenuineTolerance = 1e-9;

struct ExperimentConfig {
  MixtureParams theta_0;
  ConstraintSchedule schedule{};
  std::vector<std::size_t> sample_sizes{};
  std::size_t replicates = 1;
  std::uint64_t master_seed = 0;
  FitConfig fit{};  // components, b and seed are filled in per replicate
  double distance_threshold = 0.1;

  void validate() const {
    schedule.validate();
    if (!is_genuinely_M_components(theta_0, kGenuineTolerance))
      throw validation_error("theta_0: must have all weights positive and distinct components");
    if (sample_sizes.empty()) throw validation_error("sample_sizes: must be nonempty");
    for (std::size_t i = 0; i < sample_sizes.size(); ++i) {
      if (sample_sizes[i] < theta_0.size())
        throw validation_error("sample_sizes: every n must be at least the component count");
      if (i > 0 && sample_sizes[i] <= sample_sizes[i - 1])
        throw validation_error("sample_sizes: must be strictly increasing");
    }
    if (replicates < 1) throw validation_error("replicates: must be at least 1");
    if (!(distance_threshold > 0.0))
      throw validation_error("distance_threshold: must be positive");
    FitConfig probe = fit;
    probe.components = theta_0.size();
    probe.b = 0.5;
    probe.validate();
  }
};

struct ReplicateRecord {
  std::size_t n = 0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  ScheduleValues schedule{};
  double distance = std::numeric_limits<double>::quiet_NaN();
  double loglik_hat = std::numeric_limits<double>::quiet_NaN();
  double loglik_true = std::numeric_limits<double>::quiet_NaN();
  bool in_theta_cn = false;
  bool converged = false;
  std::size_t projection_activations = 0;
  bool guard_floor_hit = false;
  std::string status = "ok";
};

struct SampleSizeSummary {
  std::size_t n = 0;
  std::size_t replicates = 0;
  std::size_t failures = 0;
  double median = std::numeric_limits<double>::quiet_NaN();
  double q10 = std::numeric_limits<double>::quiet_NaN();
  double q25 = std::numeric_limits<double>::quiet_NaN();
  double q75 = std::numeric_limits<double>::quiet_NaN();
  double q90 = std::numeric_limits<double>::quiet_NaN();
  double mean = std::numeric_limits<double>::quiet_NaN();
  double fraction_below_threshold = 0.0;
};

struct ExperimentReport {
  std::vector<ReplicateRecord> records;  // ordered by (n, replicate)
  std::vector<SampleSizeSummary> summaries;
  double distance_threshold = 0.1;
};

// Type-7 (linear interpolation) quantile of already sorted values.
inline double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline ReplicateRecord run_replicate(const ExperimentConfig& cfg, std::size_t n, std::size_t r) {
  ReplicateRecord rec;
  rec.n = n;
  rec.replicate = r;
  rec.seed = derive_seed(cfg.master_seed, {n, r});
  rec.schedule = schedule_values(cfg.schedule, n);
  try {
    Rng rng(rec.seed);
    const auto data = sample(cfg.theta_0, n, rng);
    FitConfig fc = cfg.fit;
    fc.components = cfg.theta_0.size();
    fc.b = rec.schedule.b_n;
    fc.seed = derive_seed(rec.seed, {0xF17});
    const FitResult fit = fit_constrained(data, fc);
    rec.distance = param_distance(fit.theta_hat, cfg.theta_0);
    rec.loglik_hat = fit.loglik;
    rec.loglik_true = loglik(cfg.theta_0, data);
    rec.in_theta_cn = in_theta_c(fit.theta_hat, rec.schedule.c_n);
    rec.converged = fit.converged;
    rec.projection_activations = fit.projection_activations;
    rec.guard_floor_hit = fit.guard_floor_hit;
  } catch (const std::exception& ex) {
    rec.status = std::string("error: ") + ex.what();
  }
  return rec;
}

inline std::vector<SampleSizeSummary> summarize(const std::vector<ReplicateRecord>& records,
                                                std::span<const std::size_t> sample_sizes,
                                                double threshold) {
  std::vector<SampleSizeSummary> out;
  for (std::size_t n : sample_sizes) {
    SampleSizeSummary s;
    s.n = n;
    std::vector<double> d;
    for (const auto& rec : records) {
      if (rec.n != n) continue;
      ++s.replicates;
      if (rec.status != "ok") {
        ++s.failures;
        continue;
      }
      d.push_back(rec.distance);
    }
    std::sort(d.begin(), d.end());
    if (!d.empty()) {
      s.median = sorted_quantile(d, 0.5);
      s.q10 = sorted_quantile(d, 0.1);
      s.q25 = sorted_quantile(d, 0.25);
      s.q75 = sorted_quantile(d, 0.75);
      s.q90 = sorted_quantile(d, 0.9);
      double total = 0.0;
      std::size_t below = 0;
      for (double v : d) {
        total += v;
        below += v < threshold;
      }
      s.mean = total / static_cast<double>(d.size());
      s.fraction_below_threshold = static_cast<double>(below) / static_cast<double>(s.replicates);
    }
    out.push_back(s);
  }
  return out;
}

// Replicates run in parallel; every replicate derives its generator from
// (master_seed, n, replicate), so the report is identical at any thread count.
inline ExperimentReport run_consistency(const ExperimentConfig& cfg, std::size_t threads = 1) {
  cfg.validate();
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t n : cfg.sample_sizes)
    for (std::size_t r = 0; r < cfg.replicates; ++r) tasks.emplace_back(n, r);
  // largest n first so the long tasks do not trail at the end
  std::vector<std::size_t> schedule(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) schedule[i] = tasks.size() - 1 - i;

  ExperimentReport report;
  report.distance_threshold = cfg.distance_threshold;
  report.records.resize(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t k) {
    const std::size_t i = schedule[k];
    report.records[i] = run_replicate(cfg, tasks[i].first, tasks[i].second);
  });
  report.summaries = summarize(report.records, cfg.sample_sizes, cfg.distance_threshold);
  return report;
}

inline std::string to_csv(const ExperimentReport& report) {
  CsvTable t({"check_id", "n", "replicate", "seed", "b_n", "c_n", "log_b_n", "log_c_n",
              "distance", "loglik_hat", "loglik_true", "in_theta_cn", "converged",
              "projection_activations", "guard_floor_hit", "status"});
  for (const auto& r : report.records) {
    t.row()
        .cell("consistency")
        .cell(static_cast<std::uint64_t>(r.n))
        .cell(static_cast<std::uint64_t>(r.replicate))
        .cell(r.seed)
        .cell(r.schedule.b_n)
        .cell(r.schedule.c_n)
        .cell(r.schedule.log_b_n)
        .cell(r.schedule.log_c_n)
        .cell(r.distance)
        .cell(r.loglik_hat)
        .cell(r.loglik_true)
        .cell(r.in_theta_cn)
        .cell(r.converged)
        .cell(static_cast<std::uint64_t>(r.projection_activations))
        .cell(r.guard_floor_hit)
        .cell(r.status);
  }
  return t.str();
}

struct EntropyEstimate {
  double mean;
  double std_error;
};

// Monte Carlo estimate of E_0[log f(x; theta_0)].
inline EntropyEstimate estimate_entropy_term(const MixtureParams& theta_0, std::size_t n_mc,
                                             std::uint64_t seed) {
  if (n_mc < 1) throw validation_error("estimate_entropy_term: n_mc must be at least 1");
  const auto xs = sample(theta_0, n_mc, seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double x : xs) {
    const double v = mixture_logpdf(theta_0, x);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(n_mc);
  const double mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

} // namespace ratio_mle
