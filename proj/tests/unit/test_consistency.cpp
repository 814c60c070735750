#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ratio_mle/consistency.hpp"

using namespace ratio_mle;

namespace {

ExperimentConfig single_normal_config() {
  ExperimentConfig cfg{MixtureParams({{Family::Normal, 1.0, 0.0, 1.0}})};
  cfg.sample_sizes = {200, 2000, 20000};
  cfg.replicates = 12;
  cfg.master_seed = 2024;
  cfg.fit.restarts = 2;
  return cfg;
}

} // namespace

TEST(SortedQuantile, TypeSeven) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.1), 1.3);
  EXPECT_TRUE(std::isnan(sorted_quantile(std::vector<double>{}, 0.5)));
}

TEST(ExperimentConfig, Validation) {
  auto cfg = single_normal_config();
  EXPECT_NO_THROW(cfg.validate());
  cfg.sample_sizes = {200, 200};
  EXPECT_THROW(cfg.validate(), validation_error);
  cfg = single_normal_config();
  cfg.sample_sizes = {};
  EXPECT_THROW(cfg.validate(), validation_error);
  cfg = single_normal_config();
  cfg.replicates = 0;
  EXPECT_THROW(cfg.validate(), validation_error);
  ExperimentConfig collapsed{
      MixtureParams({{Family::Normal, 0.5, 0.0, 1.0}, {Family::Normal, 0.5, 0.0, 1.0}})};
  collapsed.sample_sizes = {100};
  EXPECT_THROW(collapsed.validate(), validation_error);
}

TEST(Consistency, RootNRateForSingleNormal) {
  const auto report = run_consistency(single_normal_config(), 2);
  ASSERT_EQ(report.summaries.size(), 3u);
  for (const auto& s : report.summaries) EXPECT_EQ(s.failures, 0u);
  const double m0 = report.summaries[0].median;
  const double m2 = report.summaries[2].median;
  EXPECT_GT(m0, m2);
  // 100x the data should cut the distance roughly 10x; allow wide Monte Carlo slack
  EXPECT_GT(m0 / m2, 4.0);
  EXPECT_LT(m0 / m2, 25.0);
  for (const auto& r : report.records) {
    EXPECT_EQ(r.status, "ok");
    EXPECT_TRUE(r.in_theta_cn);
    EXPECT_GE(r.loglik_hat, r.loglik_true - 1e-6);
  }
}

TEST(Consistency, ByteIdenticalAcrossRunsAndThreads) {
  auto cfg = single_normal_config();
  cfg.sample_sizes = {50, 500};
  cfg.replicates = 5;
  const std::string a = to_csv(run_consistency(cfg, 1));
  const std::string b = to_csv(run_consistency(cfg, 3));
  const std::string c = to_csv(run_consistency(cfg, 1));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_EQ(a.substr(0, a.find(',')), "check_id");
}

TEST(Consistency, RecordsOrderedAndSeedsDerived) {
  auto cfg = single_normal_config();
  cfg.sample_sizes = {30, 60};
  cfg.replicates = 3;
  const auto rep = run_consistency(cfg, 2);
  ASSERT_EQ(rep.records.size(), 6u);
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    EXPECT_EQ(rep.records[i].n, cfg.sample_sizes[i / 3]);
    EXPECT_EQ(rep.records[i].replicate, i % 3);
    EXPECT_EQ(rep.records[i].seed, derive_seed(cfg.master_seed, {rep.records[i].n, i % 3}));
  }
}

TEST(Consistency, TwoComponentMediansDecrease) {
  ExperimentConfig cfg{MixtureParams({{Family::Normal, 0.5, -2, 1}, {Family::Normal, 0.5, 2, 1}})};
  cfg.sample_sizes = {200, 2000};
  cfg.replicates = 8;
  cfg.master_seed = 3;
  cfg.fit.restarts = 3;
  const auto rep = run_consistency(cfg, 2);
  EXPECT_GT(rep.summaries[0].median, rep.summaries[1].median);
}

TEST(EntropyTerm, NormalAnalytic) {
  const auto e = estimate_entropy_term(MixtureParams({{Family::Normal, 1.0, 0.0, 1.0}}), 100000, 1);
  const double exact = -0.5 * std::log(2 * std::numbers::pi) - 0.5;
  EXPECT_NEAR(exact, -1.418939, 1e-6);
  EXPECT_LT(std::abs(e.mean - exact), 3 * e.std_error);
  EXPECT_GT(e.std_error, 0.0);
}

TEST(EntropyTerm, UniformIsZero) {
  const auto e = estimate_entropy_term(MixtureParams({{Family::Uniform, 1.0, 0.0, 1.0}}), 1000, 2);
  EXPECT_EQ(e.mean, 0.0);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(EntropyTerm, SeparatedMixtureInRange) {
  const MixtureParams t({{Family::Normal, 0.5, -10, 1}, {Family::Normal, 0.5, 10, 1}});
  const auto e = estimate_entropy_term(t, 200000, 3);
  // limits are -H(N(0,1)) - log 2 and -H(N(0,1)); at this separation the lower one is attained
  EXPECT_GE(e.mean, -1.418939 - std::log(2.0) - 3 * e.std_error);
  EXPECT_LE(e.mean, -1.418939);
  EXPECT_NEAR(e.mean, -1.418939 - std::log(2.0), 4 * e.std_error);
  EXPECT_THROW(estimate_entropy_term(t, 0, 3), validation_error);
}
