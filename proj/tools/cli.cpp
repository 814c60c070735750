#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ratio_mle/ratio_mle.hpp"

namespace ratio_mle::cli {
namespace {

namespace fs = std::filesystem;

// Failure to read inputs is a configuration problem (exit 1); failure to
// write results is a runtime one (exit 2).
class output_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const std::string& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error(std::string(what) + ": cannot read \"" + path + "\"");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const std::string& path) {
  const std::string text = read_file(path, "--config");
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw validation_error("--config: \"" + path + "\" is not valid JSON: " + e.what());
  }
}

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto res = std::from_chars(first, last, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != last)
    throw validation_error("--seed: expected a 64-bit unsigned integer, got \"" + text + "\"");
  return v;
}

void check_out_path(const std::string& out) {
  if (out.empty()) throw validation_error("--out: path must not be empty");
  const fs::path p(out);
  const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw validation_error("--out: directory \"" + dir.string() + "\" does not exist");
  if (fs::is_directory(p, ec)) throw validation_error("--out: \"" + out + "\" is a directory");
}

// Temp file in the destination directory, then rename over the target.
void write_atomic(const std::string& path, std::string_view content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw output_error("cannot open \"" + tmp + "\" for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw output_error("write to \"" + tmp + "\" failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw output_error("cannot move result into \"" + path + "\"");
  }
}

struct Run {
  std::string subcommand;
  json effective;  // resolved configuration, hashed into the manifest
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
};

void write_manifest(const std::string& out, const Run& run) {
  json m;
  m["tool"] = "ratio-mle";
  m["version"] = kVersion;
  m["subcommand"] = run.subcommand;
  m["config_hash"] = "fnv1a64:" + hex64(fnv1a(run.effective.dump()));
  m["seed"] = run.seed;
  m["outputs"] = run.outputs;
  m["config"] = run.effective;
  m["timestamp"] = utc_timestamp();
  write_atomic(out + ".manifest.json", m.dump(2) + "\n");
}

std::string file_hash(const std::string& path) { return "fnv1a64:" + hex64(fnv1a(read_file(path, "--input"))); }

std::vector<double> read_dataset(const std::string& path) {
  std::istringstream in(read_file(path, "--input"));
  try {
    return parse_dataset_csv(in);
  } catch (const validation_error& e) {
    throw validation_error(std::string("--input: ") + e.what());
  }
}

struct Options {
  std::string out;
  std::string seed_text;
  std::size_t threads = 0;
  bool verbose = false;

  std::string model;
  std::string input;
  std::string config;
  std::size_t n = 0;

  std::size_t components = 1;
  double b0 = 1.0;
  double d = 0.5;
  double dprime = 0.0;
  std::size_t restarts = 10;
  std::size_t max_iters = 500;
  double rel_tol = 1e-8;
  std::string family = "normal";
  std::string init = "quantile";

  std::string check;
  std::string mode;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* dprime_opt = nullptr;
  CLI::Option* config_opt = nullptr;
  CLI::Option* input_opt = nullptr;

  std::optional<std::uint64_t> seed() const {
    if (seed_opt && seed_opt->count()) return parse_seed(seed_text);
    return std::nullopt;
  }
  std::size_t thread_count() const {
    return resolve_threads(threads_opt && threads_opt->count() ? std::optional(threads) : std::nullopt);
  }
};

int run_simulate(const Options& o, std::ostream& out) {
  const MixtureParams theta = mixture_from_json(read_json(o.model));
  if (o.n < 1) throw validation_error("--n: must be at least 1");
  check_out_path(o.out);
  Run run{"simulate", {{"model", to_json(theta)}, {"n", o.n}}, o.seed().value_or(0), {o.out}};
  run.effective["seed"] = run.seed;
  write_atomic(o.out, format_dataset_csv(sample(theta, o.n, run.seed)));
  write_manifest(o.out, run);
  out << "simulate: wrote " << o.n << " observations to " << o.out << "\n";
  return 0;
}

int run_fit(const Options& o, std::ostream& out, std::ostream& err) {
  const auto data = read_dataset(o.input);
  ConstraintSchedule sched{o.b0, o.d, o.dprime_opt->count() ? o.dprime : (1.0 + o.d) / 2.0};
  try {
    sched.validate();
  } catch (const validation_error& e) {
    std::string msg = e.what();
    throw validation_error("--" + msg.substr(std::string("schedule.").size()));
  }
  const ScheduleValues sv = schedule_values(sched, data.size());
  FitConfig cfg;
  cfg.components = o.components;
  cfg.b = sv.b_n;
  cfg.restarts = o.restarts;
  cfg.max_iters = o.max_iters;
  cfg.rel_tol = o.rel_tol;
  cfg.seed = o.seed().value_or(0);
  cfg.family = family_from_string(o.family);
  cfg.init = init_strategy_from_string(o.init);
  if (!(sv.b_n > 0.0))
    throw validation_error("--d: b_n underflows to zero at n = " + std::to_string(data.size()));
  cfg.validate();
  if (data.size() < cfg.components)
    throw validation_error("--components: exceeds the number of observations");
  check_out_path(o.out);

  Run run{"fit", {{"input_hash", file_hash(o.input)}, {"n", data.size()}, {"schedule", to_json(sched)},
                  {"fit", to_json(cfg)}},
          cfg.seed, {o.out}};
  if (o.verbose) err << "fit: n = " << data.size() << ", b_n = " << format_double(sv.b_n) << "\n";
  const FitResult result = fit_constrained(data, cfg);

  json doc;
  doc["n"] = data.size();
  doc["schedule"] = to_json(sched);
  doc["b_n"] = sv.b_n;
  doc["c_n"] = sv.c_n;
  doc["fit_config"] = to_json(cfg);
  const json fitted = to_json(result);
  for (auto& [k, v] : fitted.items()) doc[k] = v;
  write_atomic(o.out, doc.dump(2) + "\n");
  write_manifest(o.out, run);
  out << "fit: loglik " << format_double(result.loglik) << ", wrote " << o.out << "\n";
  return 0;
}

int run_consistency_cmd(const Options& o, std::ostream& out, std::ostream& err) {
  json j = read_json(o.config);
  if (const auto s = o.seed()) j["master_seed"] = *s;
  const ExperimentConfig cfg = experiment_config_from_json(j);
  const std::size_t threads = o.thread_count();
  check_out_path(o.out);
  json eff = {{"theta_0", to_json(cfg.theta_0)},
              {"schedule", to_json(cfg.schedule)},
              {"sample_sizes", cfg.sample_sizes},
              {"replicates", cfg.replicates},
              {"master_seed", cfg.master_seed},
              {"fit", to_json(cfg.fit)},
              {"distance_threshold", cfg.distance_threshold}};
  eff["fit"].erase("b");
  eff["fit"].erase("components");
  eff["fit"].erase("seed");
  const std::string summary_path = o.out + ".summary.json";
  Run run{"consistency", eff, cfg.master_seed, {o.out, summary_path}};
  if (o.verbose) err << "consistency: " << cfg.sample_sizes.size() * cfg.replicates
                     << " replicates on " << threads << " threads\n";
  const ExperimentReport report = run_consistency(cfg, threads);
  write_atomic(o.out, to_csv(report));
  write_atomic(summary_path, summary_to_json(report).dump(2) + "\n");
  write_manifest(o.out, run);
  for (const auto& s : report.summaries)
    out << "n = " << s.n << ": median distance " << format_double(s.median) << ", failures "
        << s.failures << "\n";
  return 0;
}

int run_verify(const Options& o, std::ostream& out) {
  json j = o.config_opt->count() ? read_json(o.config) : json::object();
  if (const auto s = o.seed()) j["seed"] = *s;
  const std::size_t threads = o.thread_count();
  std::vector<BoundCheckReport> reports;
  json eff;
  std::uint64_t seed = 0;
  std::function<void()> work;

  if (o.check == "envelope" || o.check == "step-bound") {
    const SweepConfig sc = sweep_config_from_json(j);
    eff = {{"draws", sc.draws}, {"seed", sc.seed}};
    seed = sc.seed;
    if (o.check == "envelope")
      work = [&, sc] {
        for (Family f : kAllFamilies) reports.push_back(check_envelope(f, sc.draws, sc.seed));
        for (Family f : kAllFamilies) reports.push_back(check_crossover(f, sc.draws, sc.seed));
      };
    else
      work = [&, sc] { reports.push_back(check_step_bound(sc.draws, sc.seed)); };
  } else if (o.check == "loglik-bound") {
    if (!o.config_opt->count()) throw validation_error("--config: required for --check loglik-bound");
    const LoglikSweepConfig c = loglik_sweep_config_from_json(j);
    eff = {{"theta_0", to_json(c.theta_0)}, {"schedule", to_json(c.schedule)}, {"n", c.n},
           {"draws", c.draws}, {"max_components", c.max_components}, {"seed", c.seed}};
    seed = c.seed;
    work = [&, c] { reports.push_back(loglik_bound_sweep(c, threads)); };
  } else if (o.check == "extremes") {
    if (!o.config_opt->count()) throw validation_error("--config: required for --check extremes");
    const ExtremesConfig c = extremes_config_from_json(j);
    eff = {{"theta_0", to_json(c.theta_0)}, {"A_0", c.A_0}, {"zeta", c.zeta}, {"n_list", c.n_list},
           {"replicates", c.replicates}, {"seed", c.seed}};
    seed = c.seed;
    work = [&, c] { reports = check_extremes(c.theta_0, c.A_0, c.zeta, c.n_list, c.replicates, c.seed, threads); };
  } else if (o.check == "interval-count") {
    if (!o.config_opt->count()) throw validation_error("--config: required for --check interval-count");
    const IntervalCountConfig c = interval_count_config_from_json(j);
    eff = {{"theta_0", to_json(c.theta_0)}, {"schedule", to_json(c.schedule)}, {"n", c.n},
           {"draws", c.draws}, {"seed", c.seed}, {"adversarial", c.adversarial},
           {"A_0", c.A_0}, {"zeta", c.zeta}};
    seed = c.seed;
    work = [&, c] { reports.push_back(check_interval_count(c, threads)); };
  } else {
    throw validation_error("--check: unknown check \"" + o.check + "\"");
  }
  check_out_path(o.out);
  eff["check"] = o.check;
  const std::string summary_path = o.out + ".summary.json";
  Run run{"verify", eff, seed, {o.out, summary_path}};
  work();
  write_atomic(o.out, to_csv(reports));
  write_atomic(summary_path, summary_to_json(reports).dump(2) + "\n");
  write_manifest(o.out, run);
  std::size_t total = 0;
  for (const auto& r : reports) total += r.violations;
  out << "verify " << o.check << ": " << total << " violations in " << reports.size()
      << " report rows\n";
  return 0;
}

int run_pathology(const Options& o, std::ostream& out) {
  json j = o.config_opt->count() ? read_json(o.config) : json::object();
  if (const auto s = o.seed()) j["seed"] = *s;
  const std::string summary_path = o.out + ".summary.json";

  if (o.mode == "unbounded") {
    const UnboundedConfig c = unbounded_config_from_json(j);
    std::vector<double> data;
    json eff = {{"k_max", c.k_max}, {"schedule", to_json(c.schedule)}};
    if (o.input_opt->count()) {
      data = read_dataset(o.input);
      eff["input_hash"] = file_hash(o.input);
    } else {
      data = sample(MixtureParams({{Family::Normal, 1.0, 0.0, 1.0}}), c.n, c.seed);
      eff["n"] = c.n;
      eff["seed"] = c.seed;
    }
    if (data.size() < 2) throw validation_error("--input: need at least two observations");
    check_out_path(o.out);
    Run run{"pathology", eff, c.seed, {o.out, summary_path}};
    run.effective["mode"] = o.mode;

    const ScheduleValues sv = schedule_values(c.schedule, data.size());
    if (!(sv.b_n > 0.0)) throw validation_error("schedule: b_n underflows at this sample size");
    CsvTable t({"k", "sigma_1", "loglik", "in_theta_b", "loglik_projected"});
    for (const auto& p : unbounded_likelihood_demo(data, c.k_max)) {
      const MixtureParams theta = spike_theta(data, p.k);
      t.row()
          .cell(p.k)
          .cell(p.sigma_1)
          .cell(p.loglik)
          .cell(in_theta_b(theta, sv.b_n))
          .cell(loglik(project_scales(theta, sv.b_n), data));
    }
    FitConfig fc;
    fc.components = 2;
    fc.b = sv.b_n;
    fc.seed = c.seed;
    const FitResult fit = fit_constrained(data, fc);
    json summary = {{"n", data.size()}, {"b_n", sv.b_n}, {"fit_loglik", fit.loglik},
                    {"fit_theta_hat", to_json(fit.theta_hat)}};
    write_atomic(o.out, t.str());
    write_atomic(summary_path, summary.dump(2) + "\n");
    write_manifest(o.out, run);
    out << "pathology unbounded: wrote " << c.k_max + 1 << " rows to " << o.out << "\n";
    return 0;
  }
  if (o.mode == "divergence") {
    if (!o.config_opt->count()) throw validation_error("--config: required for --mode divergence");
    const DivergenceConfig c = divergence_config_from_json(j);
    check_out_path(o.out);
    json eff = {{"mode", o.mode}, {"theta_0", to_json(c.theta_0)}, {"r", c.r}, {"n_list", c.n_list},
                {"seed", c.seed}, {"schedule", to_json(c.schedule)}, {"n_mc", c.n_mc}};
    Run run{"pathology", eff, c.seed, {o.out, summary_path}};
    const auto rows = divergence_demo(c.theta_0, c.r, c.n_list, c.seed, c.schedule);
    const EntropyEstimate h = estimate_entropy_term(c.theta_0, c.n_mc, derive_seed(c.seed, {0xE7}));
    CsvTable t({"n", "r", "mean_loglik_pathological", "mean_loglik_true", "log_b_required",
                "in_theta_b_required", "in_theta_b_schedule", "sigma_underflow"});
    for (const auto& r : rows)
      t.row()
          .cell(static_cast<std::uint64_t>(r.n))
          .cell(c.r)
          .cell(r.mean_loglik_pathological)
          .cell(r.mean_loglik_true)
          .cell(r.log_b_required)
          .cell(r.in_theta_b_required)
          .cell(r.in_theta_b_schedule)
          .cell(r.sigma_underflow);
    json summary = {{"entropy_term", h.mean}, {"entropy_term_std_error", h.std_error}};
    write_atomic(o.out, t.str());
    write_atomic(summary_path, summary.dump(2) + "\n");
    write_manifest(o.out, run);
    out << "pathology divergence: wrote " << rows.size() << " rows to " << o.out << "\n";
    return 0;
  }
  throw validation_error("--mode: unknown mode \"" + o.mode + "\"");
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constrained maximum likelihood for location-scale mixtures", "ratio-mle"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options o;

  auto common = [&](CLI::App* sub, bool threaded) {
    sub->add_option("--out", o.out, "Output path")->required();
    o.seed_opt = sub->add_option("--seed", o.seed_text, "Seed override (64-bit unsigned)");
    if (threaded) o.threads_opt = sub->add_option("--threads", o.threads, "Worker threads");
    sub->add_flag("-v,--verbose", o.verbose, "Progress messages on stderr");
  };

  auto* simulate = app.add_subcommand("simulate", "Sample a dataset from a mixture model");
  simulate->add_option("--model", o.model, "Model JSON")->required();
  simulate->add_option("--n", o.n, "Sample size")->required();
  common(simulate, false);

  auto* fit = app.add_subcommand("fit", "Constrained fit with b derived from (b0, d, n)");
  fit->add_option("--input", o.input, "Dataset CSV")->required();
  fit->add_option("--components", o.components, "Number of components");
  fit->add_option("--b0", o.b0, "Schedule constant b0");
  fit->add_option("--d", o.d, "Schedule exponent d");
  o.dprime_opt = fit->add_option("--dprime", o.dprime, "Exponent d' of c_n (default (1+d)/2)");
  fit->add_option("--restarts", o.restarts, "Number of EM starts");
  fit->add_option("--max-iters", o.max_iters, "EM iterations per start");
  fit->add_option("--rel-tol", o.rel_tol, "Relative log-likelihood tolerance");
  fit->add_option("--family", o.family, "Component family");
  fit->add_option("--init", o.init, "Init strategy: quantile, jitter or adversarial");
  common(fit, false);

  auto* consistency = app.add_subcommand("consistency", "Monte Carlo consistency experiment");
  consistency->add_option("--config", o.config, "Experiment JSON")->required();
  common(consistency, true);

  auto* verify = app.add_subcommand("verify", "Empirical bound checks");
  verify->add_option("--check", o.check, "Check to run")
      ->required()
      ->check(CLI::IsMember({"envelope", "step-bound", "loglik-bound", "extremes", "interval-count"}));
  o.config_opt = verify->add_option("--config", o.config, "Check JSON");
  common(verify, true);

  auto* pathology = app.add_subcommand("pathology", "Degenerate likelihood demonstrations");
  pathology->add_option("--mode", o.mode, "unbounded or divergence")
      ->required()
      ->check(CLI::IsMember({"unbounded", "divergence"}));
  auto* pconfig = pathology->add_option("--config", o.config, "Pathology JSON");
  auto* pinput = pathology->add_option("--input", o.input, "Dataset CSV for --mode unbounded");
  common(pathology, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    // options registered per subcommand; point at the one that was parsed
    for (CLI::App* sub : {simulate, fit, consistency, verify, pathology}) {
      if (!sub->parsed()) continue;
      o.seed_opt = sub->get_option("--seed");
      o.threads_opt = sub == consistency || sub == verify ? sub->get_option("--threads") : nullptr;
    }
    if (pathology->parsed()) {
      o.config_opt = pconfig;
      o.input_opt = pinput;
    }
    if (simulate->parsed()) return run_simulate(o, out);
    if (fit->parsed()) return run_fit(o, out, err);
    if (consistency->parsed()) return run_consistency_cmd(o, out, err);
    if (verify->parsed()) return run_verify(o, out);
    return run_pathology(o, out);
  } catch (const validation_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return 2;
  }
}

} // namespace ratio_mle::cli
