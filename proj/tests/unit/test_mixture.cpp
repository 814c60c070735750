#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "ratio_mle/mixture.hpp"

using namespace ratio_mle;

namespace {

MixtureParams normal1(double mu = 0.0, double sigma = 1.0) {
  return MixtureParams({{Family::Normal, 1.0, mu, sigma}});
}

double naive_logpdf(const MixtureParams& theta, double x) {
  double acc = 0.0;
  for (const Component& c : theta)
    acc += c.weight * oracle::pdf(c.family, (x - c.mu) / c.sigma) / c.sigma;
  return std::log(acc);
}

} // namespace

TEST(MixtureParams, Validation) {
  EXPECT_THROW(MixtureParams({}), validation_error);
  EXPECT_THROW(MixtureParams({{Family::Normal, 0.6, 0.0, 1.0}}), validation_error);
  EXPECT_THROW(MixtureParams({{Family::Normal, 1.0, 0.0, 0.0}}), validation_error);
  EXPECT_THROW(MixtureParams({{Family::Normal, 1.0, 0.0, -2.0}}), validation_error);
  EXPECT_THROW(MixtureParams({{Family::Normal, 1.0, NAN, 1.0}}), validation_error);
  EXPECT_THROW(MixtureParams({{Family::Normal, 1.5, 0.0, 1.0}, {Family::Normal, -0.5, 0.0, 1.0}}),
               validation_error);
  EXPECT_NO_THROW(MixtureParams({{Family::Normal, 1.0, 0.0, 1.0}, {Family::Normal, 0.0, 0.0, 1.0}}));
}

TEST(MixtureParams, ErrorNamesTheField) {
  try {
    MixtureParams({{Family::Normal, 0.5, 0.0, 1.0}, {Family::Normal, 0.5, 0.0, -1.0}});
    FAIL();
  } catch (const validation_error& e) {
    EXPECT_NE(std::string(e.what()).find("components[1].sigma"), std::string::npos) << e.what();
  }
}

TEST(MixtureParams, OrderStatistics) {
  const MixtureParams t({{Family::Normal, 0.2, 0, 0.5}, {Family::Laplace, 0.5, 0, 1.0},
                         {Family::Normal, 0.3, 0, 0.8}});
  EXPECT_EQ(t.min_sigma(), 0.5);
  EXPECT_EQ(t.max_sigma(), 1.0);
}

TEST(MixtureLogpdf, Examples) {
  EXPECT_NEAR(mixture_logpdf(normal1(), 0.0), -0.918939, 1e-6);
  const MixtureParams same({{Family::Normal, 0.5, 0, 1}, {Family::Normal, 0.5, 0, 1}});
  EXPECT_NEAR(mixture_logpdf(same, 0.0), -0.918939, 1e-6);
  const MixtureParams two({{Family::Normal, 0.3, -2, 1}, {Family::Normal, 0.7, 2, 1}});
  EXPECT_NEAR(mixture_logpdf(two, 0.0), -2.918939, 1e-6);
}

TEST(MixtureLogpdf, ZeroDensityIsNegativeInfinity) {
  const MixtureParams u({{Family::Uniform, 1.0, 0.0, 1.0}});
  EXPECT_EQ(mixture_logpdf(u, 3.0), -INFINITY);
  EXPECT_EQ(mixture_logpdf(u, 0.2), 0.0);
}

TEST(MixtureLogpdf, ZeroWeightContributesNothing) {
  const MixtureParams t({{Family::Normal, 1.0, 0.0, 1.0}, {Family::Normal, 0.0, 0.0, 1e-300}});
  EXPECT_NEAR(mixture_logpdf(t, 0.0), -0.918939, 1e-6);
  const MixtureParams u({{Family::Uniform, 1.0, 0.0, 1.0}, {Family::Normal, 0.0, 5.0, 1.0}});
  EXPECT_EQ(mixture_logpdf(u, 5.0), -INFINITY);
}

TEST(MixtureLogpdf, MatchesNaiveSum) {
  Rng rng(8);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<Component> comps;
    const int M = 1 + static_cast<int>(rng.index(4));
    double total = 0.0;
    std::vector<double> w(M);
    for (double& v : w) total += (v = 0.1 + rng.uniform());
    for (int m = 0; m < M; ++m)
      comps.push_back({kAllFamilies[rng.index(3)], w[m] / total, rng.uniform(-3, 3),
                       rng.log_uniform(0.1, 10)});
    const MixtureParams t(comps);
    const double x = rng.uniform(-6, 6);
    const double naive = naive_logpdf(t, x);
    if (std::isfinite(naive)) {
      EXPECT_NEAR(mixture_logpdf(t, x), naive, 1e-10);
    }
  }
}

TEST(MixtureLogpdf, TinyScalesStayFinite) {
  const MixtureParams t({{Family::Normal, 0.5, 0.0, 1e-300}, {Family::Normal, 0.5, 1.0, 1.0}});
  const double at_spike = mixture_logpdf(t, 0.0);
  EXPECT_TRUE(std::isfinite(at_spike));
  EXPECT_NEAR(at_spike, std::log(0.5) - 0.918939 + 300 * std::log(10.0), 1e-6);
  const double away = mixture_logpdf(t, 1.0);
  EXPECT_NEAR(away, std::log(0.5) - 0.918938533, 1e-8);
  for (double s = 1e-300; s < 1.0; s *= 1e10) {
    const MixtureParams u({{Family::Logistic, 0.5, 0.0, s}, {Family::Laplace, 0.5, 0.5, 1.0}});
    EXPECT_FALSE(std::isnan(mixture_logpdf(u, 0.3)));
    EXPECT_FALSE(std::isnan(mixture_logpdf(u, 0.0)));
  }
}

TEST(Loglik, Examples) {
  const std::vector<double> one{0.0};
  EXPECT_NEAR(loglik(normal1(), one), -0.918939, 1e-6);
  const std::vector<double> copies(7, 0.4);
  EXPECT_NEAR(loglik(normal1(), copies), 7 * mixture_logpdf(normal1(), 0.4), 1e-12);
  // -(3/2) log(2 pi) - (1/2)(1 + 0 + 1)
  const std::vector<double> three{-1.0, 0.0, 1.0};
  EXPECT_NEAR(loglik(normal1(), three), -1.5 * std::log(2 * std::numbers::pi) - 1.0, 1e-12);
  EXPECT_NEAR(loglik(normal1(), three), -3.756816, 1e-6);
}

TEST(Loglik, ErrorsAndSentinel) {
  EXPECT_THROW(loglik(normal1(), std::vector<double>{}), validation_error);
  const MixtureParams u({{Family::Uniform, 1.0, 0.0, 1.0}});
  EXPECT_EQ(loglik(u, std::vector<double>{0.1, 2.0}), -INFINITY);
}

TEST(Sample, UniformSupport) {
  const auto xs = sample(MixtureParams({{Family::Uniform, 1.0, 0.0, 1.0}}), 10000, 1);
  for (double x : xs) {
    EXPECT_GE(x, -0.5);
    EXPECT_LE(x, 0.5);
  }
}

TEST(Sample, Deterministic) {
  const MixtureParams t({{Family::Normal, 0.3, -2, 1}, {Family::Laplace, 0.7, 2, 0.5}});
  EXPECT_EQ(sample(t, 1000, 42), sample(t, 1000, 42));
  EXPECT_NE(sample(t, 1000, 42), sample(t, 1000, 43));
}

TEST(Sample, ZeroSizeRejected) {
  EXPECT_THROW(sample(normal1(), 0, 1), validation_error);
}

TEST(Sample, DegenerateWeightFollowsFirstComponent) {
  const MixtureParams t({{Family::Normal, 1.0, 1.0, 2.0}, {Family::Normal, 0.0, 50.0, 1.0}});
  const double crit = 1.36 / std::sqrt(1000.0);
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto xs = sample(t, 1000, seed);
    const double d = oracle::ks_statistic(xs, [](double x) {
      return oracle::cdf(Family::Normal, (x - 1.0) / 2.0);
    });
    passes += d < crit;
  }
  EXPECT_GE(passes, 90);
}

TEST(Sample, SingleComponentLawAtLargeN) {
  for (Family f : kAllFamilies) {
    int passes = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto xs = sample(MixtureParams({{f, 1.0, 0.5, 1.5}}), 10000, seed);
      const double d = oracle::ks_statistic(
          xs, [&](double x) { return oracle::cdf(f, (x - 0.5) / 1.5); });
      passes += d < 0.02;
    }
    EXPECT_GE(passes, 38) << to_string(f);
  }
}

TEST(Sample, MixtureWeightsRespected) {
  const MixtureParams t({{Family::Normal, 0.3, -20, 1}, {Family::Normal, 0.7, 20, 1}});
  const auto xs = sample(t, 100000, 5);
  const double left = static_cast<double>(std::count_if(xs.begin(), xs.end(), [](double x) { return x < 0; }));
  EXPECT_NEAR(left / 100000.0, 0.3, 0.005);
}
