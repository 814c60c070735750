#pragma once

// JSON schemas for models, configs and results; the one-column dataset CSV.
// Parse errors name the offending field, e.g. "fit.restarts: expected a
// nonnegative integer".

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ratio_mle/bound_checks.hpp"
#include "ratio_mle/consistency.hpp"
#include "ratio_mle/constraints.hpp"
#include "ratio_mle/errors.hpp"
#include "ratio_mle/estimator.hpp"
#include "ratio_mle/mixture.hpp"
#include "ratio_mle/report.hpp"

namespace ratio_mle {

using json = nlohmann::ordered_json;

namespace detail {

inline std::string join_path(std::string_view ctx, std::string_view key) {
  if (ctx.empty()) return std::string(key);
  return std::string(ctx) + "." + std::string(key);
}

inline const json& require(const json& j, std::string_view key, std::string_view ctx) {
  if (!j.is_object()) throw validation_error(std::string(ctx.empty() ? "config" : ctx) + ": expected an object");
  const auto it = j.find(std::string(key));
  if (it == j.end()) throw validation_error(join_path(ctx, key) + ": required field missing");
  return *it;
}

inline double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) throw validation_error(path + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw validation_error(path + ": expected a finite number");
  return d;
}

inline std::uint64_t as_uint(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw validation_error(path + ": expected a nonnegative integer");
}

inline std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw validation_error(path + ": expected a string");
  return v.get<std::string>();
}

inline double get_double(const json& j, std::string_view key, std::string_view ctx,
                         std::optional<double> fallback = std::nullopt) {
  if (fallback && (!j.is_object() || !j.contains(std::string(key)))) return *fallback;
  return as_double(require(j, key, ctx), join_path(ctx, key));
}

inline std::uint64_t get_uint(const json& j, std::string_view key, std::string_view ctx,
                              std::optional<std::uint64_t> fallback = std::nullopt) {
  if (fallback && (!j.is_object() || !j.contains(std::string(key)))) return *fallback;
  return as_uint(require(j, key, ctx), join_path(ctx, key));
}

inline std::string get_string(const json& j, std::string_view key, std::string_view ctx,
                              std::optional<std::string> fallback = std::nullopt) {
  if (fallback && (!j.is_object() || !j.contains(std::string(key)))) return *fallback;
  return as_string(require(j, key, ctx), join_path(ctx, key));
}

inline bool get_bool(const json& j, std::string_view key, std::string_view ctx, bool fallback) {
  if (!j.is_object() || !j.contains(std::string(key))) return fallback;
  const json& v = j.at(std::string(key));
  if (!v.is_boolean()) throw validation_error(join_path(ctx, key) + ": expected true or false");
  return v.get<bool>();
}

inline std::vector<std::size_t> get_sizes(const json& j, std::string_view key, std::string_view ctx,
                                          std::optional<std::vector<std::size_t>> fallback = std::nullopt) {
  if (fallback && (!j.is_object() || !j.contains(std::string(key)))) return *fallback;
  const json& v = require(j, key, ctx);
  const std::string path = join_path(ctx, key);
  if (!v.is_array()) throw validation_error(path + ": expected an array of integers");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_uint(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace detail

// {"components": [{"family": "normal", "weight": 0.5, "mu": -2.0, "sigma": 1.0}, ...]}
inline MixtureParams mixture_from_json(const json& j, std::string_view ctx = "model") {
  const json& arr = detail::require(j, "components", ctx);
  const std::string base = detail::join_path(ctx, "components");
  if (!arr.is_array() || arr.empty()) throw validation_error(base + ": expected a nonempty array");
  std::vector<Component> comps;
  for (std::size_t m = 0; m < arr.size(); ++m) {
    const std::string c = base + "[" + std::to_string(m) + "]";
    const json& e = arr[m];
    Component comp;
    try {
      comp.family = family_from_string(detail::get_string(e, "family", c));
    } catch (const validation_error& ex) {
      const std::string msg = ex.what();
      throw validation_error(msg.rfind(c, 0) == 0 ? msg : c + ".family: " + msg);
    }
    comp.weight = detail::get_double(e, "weight", c);
    comp.mu = detail::get_double(e, "mu", c);
    comp.sigma = detail::get_double(e, "sigma", c);
    comps.push_back(comp);
  }
  try {
    return MixtureParams(std::move(comps));
  } catch (const validation_error& ex) {
    throw validation_error(std::string(ctx) + "." + ex.what());
  }
}

inline json to_json(const MixtureParams& theta) {
  json arr = json::array();
  for (const Component& c : theta)
    arr.push_back({{"family", std::string(to_string(c.family))},
                   {"weight", c.weight},
                   {"mu", c.mu},
                   {"sigma", c.sigma}});
  return {{"components", arr}};
}

inline ConstraintSchedule schedule_from_json(const json& j, std::string_view ctx = "schedule") {
  ConstraintSchedule s;
  s.b0 = detail::get_double(j, "b0", ctx, 1.0);
  s.d = detail::get_double(j, "d", ctx, 0.5);
  s.d_prime = detail::get_double(j, "d_prime", ctx, (1.0 + s.d) / 2.0);
  try {
    s.validate();
  } catch (const validation_error& ex) {
    std::string msg = ex.what();
    if (msg.rfind("schedule.", 0) == 0) msg = msg.substr(9);
    throw validation_error(std::string(ctx) + "." + msg);
  }
  return s;
}

inline json to_json(const ConstraintSchedule& s) {
  return {{"b0", s.b0}, {"d", s.d}, {"d_prime", s.d_prime}};
}

// Fit template: everything except b, which is always derived from the
// schedule at the data's sample size.
inline FitConfig fit_config_from_json(const json& j, std::string_view ctx = "fit") {
  FitConfig f;
  f.components = detail::get_uint(j, "components", ctx, 1);
  f.restarts = detail::get_uint(j, "restarts", ctx, 10);
  f.max_iters = detail::get_uint(j, "max_iters", ctx, 500);
  f.rel_tol = detail::get_double(j, "rel_tol", ctx, 1e-8);
  f.seed = detail::get_uint(j, "seed", ctx, 0);
  f.guard_floor = detail::get_double(j, "guard_floor", ctx, kDefaultGuardFloor);
  try {
    f.init = init_strategy_from_string(detail::get_string(j, "init", ctx, "quantile"));
    f.family = family_from_string(detail::get_string(j, "family", ctx, "normal"));
  } catch (const validation_error& ex) {
    const std::string msg = ex.what();
    throw validation_error(msg.rfind(std::string(ctx), 0) == 0 ? msg : std::string(ctx) + ": " + msg);
  }
  return f;
}

inline json to_json(const FitConfig& f) {
  return {{"components", f.components},       {"b", f.b},
          {"restarts", f.restarts},           {"max_iters", f.max_iters},
          {"rel_tol", f.rel_tol},             {"init", std::string(to_string(f.init))},
          {"seed", f.seed},                   {"family", std::string(to_string(f.family))},
          {"guard_floor", f.guard_floor}};
}

inline json to_json(const FitResult& r) {
  json starts = json::array();
  for (const StartReport& s : r.starts)
    starts.push_back({{"iterations", s.iterations},
                      {"converged", s.converged},
                      {"aborted", s.aborted},
                      {"abort_reason", s.abort_reason},
                      {"loglik", detail::number_or_null(s.loglik)},
                      {"projection_activations", s.projection_activations},
                      {"guard_floor_hit", s.guard_floor_hit}});
  return {{"theta_hat", to_json(r.theta_hat)},
          {"loglik", detail::number_or_null(r.loglik)},
          {"b", r.b},
          {"in_theta_b", in_theta_b(r.theta_hat, r.b)},
          {"converged", r.converged},
          {"best_start_index", r.best_start_index},
          {"projection_activations", r.projection_activations},
          {"guard_floor_hit", r.guard_floor_hit},
          {"starts", starts}};
}

// {"alpha": K1, "mu": [lo, hi, K2], "sigma_log10": [lo, hi, K3]}
inline GridSpec grid_spec_from_json(const json& j, std::string_view ctx = "grid") {
  GridSpec g;
  g.alpha_count = detail::get_uint(j, "alpha", ctx);
  auto axis = [&](std::string_view key) {
    const json& v = detail::require(j, key, ctx);
    const std::string path = detail::join_path(ctx, key);
    if (!v.is_array() || v.size() != 3) throw validation_error(path + ": expected [lo, hi, count]");
    GridAxis a{detail::as_double(v[0], path + "[0]"), detail::as_double(v[1], path + "[1]"),
               detail::as_uint(v[2], path + "[2]")};
    if (a.count < 1) throw validation_error(path + "[2]: count must be at least 1");
    if (a.hi < a.lo) throw validation_error(path + ": hi must not be below lo");
    return a;
  };
  g.mu = axis("mu");
  g.sigma_log10 = axis("sigma_log10");
  return g;
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg{mixture_from_json(detail::require(j, "theta_0", ""), "theta_0")};
  cfg.schedule = schedule_from_json(j.contains("schedule") ? j.at("schedule") : json::object());
  cfg.sample_sizes = detail::get_sizes(j, "sample_sizes", "");
  cfg.replicates = detail::get_uint(j, "replicates", "");
  cfg.master_seed = detail::get_uint(j, "master_seed", "", 0);
  cfg.fit = fit_config_from_json(j.contains("fit") ? j.at("fit") : json::object());
  cfg.distance_threshold = detail::get_double(j, "distance_threshold", "", 0.1);
  cfg.validate();
  return cfg;
}

inline json summary_to_json(const ExperimentReport& report) {
  json per_n = json::array();
  for (const auto& s : report.summaries)
    per_n.push_back({{"n", s.n},
                     {"replicates", s.replicates},
                     {"failures", s.failures},
                     {"median", detail::number_or_null(s.median)},
                     {"q10", detail::number_or_null(s.q10)},
                     {"q25", detail::number_or_null(s.q25)},
                     {"q75", detail::number_or_null(s.q75)},
                     {"q90", detail::number_or_null(s.q90)},
                     {"mean", detail::number_or_null(s.mean)},
                     {"fraction_below_threshold", s.fraction_below_threshold}});
  bool decreasing = true;
  for (std::size_t i = 1; i < report.summaries.size(); ++i)
    decreasing &= report.summaries[i].median < report.summaries[i - 1].median;
  return {{"distance_threshold", report.distance_threshold},
          {"median_strictly_decreasing", decreasing},
          {"sample_sizes", per_n}};
}

inline json summary_to_json(const std::vector<BoundCheckReport>& reports) {
  json arr = json::array();
  std::size_t total = 0;
  for (const auto& r : reports) {
    total += r.violations;
    arr.push_back({{"check_id", r.check_id},
                   {"n", r.n},
                   {"replicates", r.replicates},
                   {"violations", r.violations},
                   {"worst_margin", detail::number_or_null(r.worst_margin)}});
  }
  return {{"total_violations", total}, {"checks", arr}};
}

inline LoglikSweepConfig loglik_sweep_config_from_json(const json& j) {
  LoglikSweepConfig cfg{mixture_from_json(detail::require(j, "theta_0", ""), "theta_0")};
  cfg.schedule = j.contains("schedule") ? schedule_from_json(j.at("schedule"))
                                        : ConstraintSchedule{1.0, 0.3, 0.6};
  cfg.n = detail::get_uint(j, "n", "", 1000);
  cfg.draws = detail::get_uint(j, "draws", "", 1000);
  cfg.max_components = detail::get_uint(j, "max_components", "", 3);
  cfg.seed = detail::get_uint(j, "seed", "", 0);
  if (cfg.n < 1) throw validation_error("n: must be at least 1");
  if (cfg.max_components < 1) throw validation_error("max_components: must be at least 1");
  return cfg;
}

inline IntervalCountConfig interval_count_config_from_json(const json& j) {
  IntervalCountConfig cfg{mixture_from_json(detail::require(j, "theta_0", ""), "theta_0")};
  cfg.schedule = j.contains("schedule") ? schedule_from_json(j.at("schedule"))
                                        : ConstraintSchedule{1.0, 0.3, 0.6};
  cfg.n = detail::get_uint(j, "n", "", 10'000);
  cfg.draws = detail::get_uint(j, "draws", "", 200);
  cfg.seed = detail::get_uint(j, "seed", "", 0);
  cfg.adversarial = detail::get_bool(j, "adversarial", "", false);
  cfg.A_0 = detail::get_double(j, "A_0", "", 10.0);
  cfg.zeta = detail::get_double(j, "zeta", "", 1.0);
  if (cfg.n < 100) throw validation_error("n: must be at least 100");
  if (!(cfg.A_0 > 0.0)) throw validation_error("A_0: must be positive");
  if (!(cfg.zeta > 0.0)) throw validation_error("zeta: must be positive");
  return cfg;
}

struct ExtremesConfig {
  MixtureParams theta_0;
  double A_0 = 10.0;
  double zeta = 1.0;
  std::vector<std::size_t> n_list{100, 1000, 10000};
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
};

inline ExtremesConfig extremes_config_from_json(const json& j) {
  ExtremesConfig cfg{mixture_from_json(detail::require(j, "theta_0", ""), "theta_0")};
  cfg.A_0 = detail::get_double(j, "A_0", "", 10.0);
  cfg.zeta = detail::get_double(j, "zeta", "", 1.0);
  cfg.n_list = detail::get_sizes(j, "n_list", "", cfg.n_list);
  cfg.replicates = detail::get_uint(j, "replicates", "", 1000);
  cfg.seed = detail::get_uint(j, "seed", "", 0);
  if (!(cfg.A_0 > 0.0)) throw validation_error("A_0: must be positive");
  if (!(cfg.zeta > 0.0)) throw validation_error("zeta: must be positive");
  for (std::size_t n : cfg.n_list)
    if (n == 0) throw validation_error("n_list: sample sizes must be positive");
  return cfg;
}

// Envelope and step-bound sweeps only need a draw count and a seed.
struct SweepConfig {
  std::size_t draws = 100'000;
  std::uint64_t seed = 0;
};

inline SweepConfig sweep_config_from_json(const json& j) {
  return {detail::get_uint(j, "draws", "", 100'000), detail::get_uint(j, "seed", "", 0)};
}

struct UnboundedConfig {
  std::size_t n = 100;
  std::uint64_t seed = 0;
  int k_max = 12;
  ConstraintSchedule schedule{};
};

inline UnboundedConfig unbounded_config_from_json(const json& j) {
  UnboundedConfig cfg;
  cfg.n = detail::get_uint(j, "n", "", 100);
  cfg.seed = detail::get_uint(j, "seed", "", 0);
  cfg.k_max = static_cast<int>(detail::get_uint(j, "k_max", "", 12));
  cfg.schedule = j.contains("schedule") ? schedule_from_json(j.at("schedule")) : ConstraintSchedule{};
  if (cfg.n < 2) throw validation_error("n: must be at least 2");
  if (cfg.k_max > 300) throw validation_error("k_max: must be at most 300");
  return cfg;
}

struct DivergenceConfig {
  MixtureParams theta_0;
  double r = 2.0;
  std::vector<std::size_t> n_list{10, 100, 1000};
  std::uint64_t seed = 0;
  ConstraintSchedule schedule{};
  std::size_t n_mc = 100'000;
};

inline DivergenceConfig divergence_config_from_json(const json& j) {
  DivergenceConfig cfg{mixture_from_json(detail::require(j, "theta_0", ""), "theta_0")};
  cfg.r = detail::get_double(j, "r", "", 2.0);
  cfg.n_list = detail::get_sizes(j, "n_list", "", cfg.n_list);
  cfg.seed = detail::get_uint(j, "seed", "", 0);
  cfg.schedule = j.contains("schedule") ? schedule_from_json(j.at("schedule")) : ConstraintSchedule{};
  cfg.n_mc = detail::get_uint(j, "n_mc", "", 100'000);
  if (!(cfg.r > 0.0)) throw validation_error("r: must be positive");
  if (cfg.theta_0.size() < 2) throw validation_error("theta_0: needs at least two components");
  if (cfg.n_mc < 1) throw validation_error("n_mc: must be at least 1");
  for (std::size_t n : cfg.n_list)
    if (n == 0) throw validation_error("n_list: sample sizes must be positive");
  return cfg;
}

// Dataset CSV: header "x", then one observation per line.
inline std::string format_dataset_csv(std::span<const double> data) {
  std::string out = "x\n";
  for (double x : data) {
    out += format_double(x);
    out += '\n';
  }
  return out;
}

inline std::vector<double> parse_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> out;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "x") throw validation_error("dataset: line 1: expected header \"x\"");
      header_seen = true;
      continue;
    }
    double v = 0.0;
    const char* first = line.data();
    const char* last = line.data() + line.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
      throw validation_error("dataset: line " + std::to_string(line_no) +
                             ": expected a finite decimal number, got \"" + line + "\"");
    out.push_back(v);
  }
  if (!header_seen) throw validation_error("dataset: missing header \"x\"");
  if (out.empty()) throw validation_error("dataset: no observations");
  return out;
}

inline std::vector<double> parse_dataset_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_dataset_csv(in);
}

} // namespace ratio_mle
