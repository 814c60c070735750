#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "ratio_mle/ratio_mle.hpp"

using namespace ratio_mle;
namespace fs = std::filesystem;

namespace {

const std::string kSamples = RATIO_MLE_SAMPLES_DIR;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "ratio-mle");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ratio_mle_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::string strip_timestamp(std::string manifest) {
  const auto j = json::parse(manifest);
  auto copy = j;
  copy.erase("timestamp");
  return copy.dump();
}

} // namespace

TEST_F(Cli, SimulateIsDeterministic) {
  const auto a = run({"simulate", "--model", kSamples + "/model.json", "--n", "1000", "--seed", "42",
                      "--out", path("a.csv")});
  const auto b = run({"simulate", "--model", kSamples + "/model.json", "--n", "1000", "--seed", "42",
                      "--out", path("b.csv")});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  const std::string csv = slurp(path("a.csv"));
  EXPECT_EQ(csv, slurp(path("b.csv")));
  EXPECT_EQ(parse_dataset_csv(csv).size(), 1000u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1001);
  const auto m = json::parse(slurp(path("a.csv.manifest.json")));
  EXPECT_EQ(m["seed"].get<std::uint64_t>(), 42u);
  EXPECT_TRUE(m.contains("config_hash"));
  EXPECT_TRUE(m.contains("version"));
  EXPECT_TRUE(m.contains("timestamp"));
  EXPECT_FALSE(fs::exists(path("a.csv.tmp")));
}

TEST_F(Cli, FitProducesFeasibleResult) {
  ASSERT_EQ(run({"simulate", "--model", kSamples + "/model.json", "--n", "1000", "--seed", "42",
                 "--out", path("data.csv")})
                .code,
            0);
  const auto r = run({"fit", "--input", path("data.csv"), "--components", "2", "--b0", "1.0", "--d",
                      "0.5", "--restarts", "10", "--seed", "7", "--out", path("fit.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(slurp(path("fit.json")));
  const auto theta = mixture_from_json(j["theta_hat"], "theta_hat");
  const double b = schedule_values({1.0, 0.5, 0.75}, 1000).b_n;
  EXPECT_DOUBLE_EQ(j["b"].get<double>(), b);
  EXPECT_TRUE(in_theta_b(theta, b));
  EXPECT_TRUE(j["in_theta_b"].get<bool>());
  EXPECT_EQ(j["starts"].size(), 10u);

  // same argv, same files: byte-identical output and manifest apart from the timestamp
  const std::string first = slurp(path("fit.json"));
  const std::string manifest = slurp(path("fit.json.manifest.json"));
  ASSERT_EQ(run({"fit", "--input", path("data.csv"), "--components", "2", "--b0", "1.0", "--d",
                 "0.5", "--restarts", "10", "--seed", "7", "--out", path("fit.json")})
                .code,
            0);
  EXPECT_EQ(first, slurp(path("fit.json")));
  EXPECT_EQ(strip_timestamp(manifest), strip_timestamp(slurp(path("fit.json.manifest.json"))));
}

TEST_F(Cli, VerifyIntervalCount) {
  std::ofstream(path("ic.json")) << R"({
    "theta_0": {"components": [{"family": "normal", "weight": 0.5, "mu": -2, "sigma": 1},
                               {"family": "normal", "weight": 0.5, "mu": 2, "sigma": 1}]},
    "schedule": {"b0": 1, "d": 0.3, "d_prime": 0.6}, "n": 1000, "draws": 20, "seed": 1})";
  const auto r = run({"verify", "--check", "interval-count", "--config", path("ic.json"), "--out",
                      path("report.csv"), "--threads", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(path("report.csv"));
  EXPECT_NE(csv.substr(0, csv.find('\n')).find("violations"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("report.csv.manifest.json")));
  EXPECT_TRUE(fs::exists(path("report.csv.summary.json")));
}

TEST_F(Cli, VerifyEveryCheckRuns) {
  std::ofstream(path("sweep.json")) << R"({"draws": 1000, "seed": 2})";
  for (const char* check : {"envelope", "step-bound"})
    EXPECT_EQ(run({"verify", "--check", check, "--config", path("sweep.json"), "--out",
                   path(std::string(check) + ".csv")})
                  .code,
              0)
        << check;
  std::ofstream(path("ll.json")) << R"({
    "theta_0": {"components": [{"family": "normal", "weight": 1, "mu": 0, "sigma": 1}]},
    "n": 100, "draws": 20})";
  EXPECT_EQ(run({"verify", "--check", "loglik-bound", "--config", path("ll.json"), "--out",
                 path("ll.csv")})
                .code,
            0);
  std::ofstream(path("ex.json")) << R"({
    "theta_0": {"components": [{"family": "laplace", "weight": 1, "mu": 0, "sigma": 1}]},
    "n_list": [10, 100], "replicates": 50})";
  EXPECT_EQ(run({"verify", "--check", "extremes", "--config", path("ex.json"), "--out",
                 path("ex.csv")})
                .code,
            0);
  const std::string csv = slurp(path("ex.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST_F(Cli, ConsistencyWritesCsvSummaryAndManifest) {
  const auto a = run({"consistency", "--config", kSamples + "/consistency_quick.json", "--out",
                      path("c1.csv"), "--threads", "1"});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run({"consistency", "--config", kSamples + "/consistency_quick.json", "--out",
                      path("c2.csv"), "--threads", "3"});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(path("c1.csv")), slurp(path("c2.csv")));
  const auto s = json::parse(slurp(path("c1.csv.summary.json")));
  EXPECT_EQ(s["sample_sizes"].size(), 2u);
  EXPECT_TRUE(s.contains("median_strictly_decreasing"));
}

TEST_F(Cli, SeedOverrideChangesOutput) {
  ASSERT_EQ(run({"consistency", "--config", kSamples + "/consistency_quick.json", "--out",
                 path("a.csv"), "--seed", "1"})
                .code,
            0);
  ASSERT_EQ(run({"consistency", "--config", kSamples + "/consistency_quick.json", "--out",
                 path("b.csv"), "--seed", "2"})
                .code,
            0);
  EXPECT_NE(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(json::parse(slurp(path("a.csv.manifest.json")))["seed"].get<std::uint64_t>(), 1u);
}

TEST_F(Cli, PathologyModes) {
  const auto u = run({"pathology", "--mode", "unbounded", "--config", kSamples + "/unbounded.json",
                      "--out", path("u.csv")});
  ASSERT_EQ(u.code, 0) << u.err;
  const std::string csv = slurp(path("u.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 14);
  const auto s = json::parse(slurp(path("u.csv.summary.json")));
  EXPECT_TRUE(s.contains("fit_loglik"));

  ASSERT_EQ(run({"simulate", "--model", kSamples + "/model.json", "--n", "50", "--out",
                 path("d.csv")})
                .code,
            0);
  EXPECT_EQ(run({"pathology", "--mode", "unbounded", "--input", path("d.csv"), "--out",
                 path("u2.csv")})
                .code,
            0);

  std::ofstream(path("div.json")) << R"({
    "theta_0": {"components": [{"family": "normal", "weight": 0.5, "mu": -2, "sigma": 1},
                               {"family": "normal", "weight": 0.5, "mu": 2, "sigma": 1}]},
    "r": 2, "n_list": [10, 100], "n_mc": 1000})";
  const auto d = run({"pathology", "--mode", "divergence", "--config", path("div.json"), "--out",
                      path("div.csv")});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_TRUE(json::parse(slurp(path("div.csv.summary.json"))).contains("entropy_term"));
}

TEST_F(Cli, ValidationErrorsExitOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"bogus"}).code, 1);
  EXPECT_EQ(run({"simulate", "--n", "10", "--out", path("x.csv")}).code, 1);
  EXPECT_EQ(run({"simulate", "--model", path("missing.json"), "--n", "10", "--out", path("x.csv")}).code, 1);
  EXPECT_EQ(run({"simulate", "--model", kSamples + "/model.json", "--n", "10", "--seed", "-3",
                 "--out", path("x.csv")})
                .code,
            1);
  EXPECT_EQ(run({"simulate", "--model", kSamples + "/model.json", "--n", "10", "--seed",
                 "18446744073709551616", "--out", path("x.csv")})
                .code,
            1);
  EXPECT_EQ(run({"verify", "--check", "nonsense", "--out", path("x.csv")}).code, 1);
  EXPECT_EQ(run({"verify", "--check", "extremes", "--out", path("x.csv")}).code, 1);
  EXPECT_EQ(run({"pathology", "--mode", "other", "--out", path("x.csv")}).code, 1);
  EXPECT_FALSE(fs::exists(path("x.csv")));

  std::ofstream(path("bad.json")) << R"({"components": [{"family": "normal", "weight": 1, "mu": 0, "sigma": -1}]})";
  const auto r = run({"simulate", "--model", path("bad.json"), "--n", "10", "--out", path("x.csv")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("components[0].sigma"), std::string::npos) << r.err;

  std::ofstream(path("data.csv")) << "x\n1\n2\n";
  const auto f = run({"fit", "--input", path("data.csv"), "--d", "1.2", "--out", path("f.json")});
  EXPECT_EQ(f.code, 1);
  EXPECT_NE(f.err.find("d"), std::string::npos);
  EXPECT_EQ(run({"fit", "--input", path("data.csv"), "--components", "5", "--out", path("f.json")}).code, 1);
  EXPECT_EQ(run({"fit", "--input", path("data.csv"), "--family", "uniform", "--out", path("f.json")}).code, 1);
  std::ofstream(path("broken.csv")) << "x\n1\nnope\n";
  const auto g = run({"fit", "--input", path("broken.csv"), "--out", path("f.json")});
  EXPECT_EQ(g.code, 1);
  EXPECT_NE(g.err.find("line 3"), std::string::npos) << g.err;
  EXPECT_EQ(run({"simulate", "--model", kSamples + "/model.json", "--n", "10", "--out",
                 path("no/such/dir/x.csv")})
                .code,
            1);
}

TEST_F(Cli, RuntimeFailureExitsTwo) {
  // a directory squatting on the temp file name makes the final write fail
  fs::create_directories(path("out.csv.tmp"));
  const auto r = run({"simulate", "--model", kSamples + "/model.json", "--n", "10", "--out",
                      path("out.csv")});
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_FALSE(fs::exists(path("out.csv")));
}
