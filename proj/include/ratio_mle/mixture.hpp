#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ratio_mle/errors.hpp"
#include "ratio_mle/families.hpp"
#include "ratio_mle/rng.hpp"

namespace ratio_mle {

struct Component {
  Family family = Family::Normal;
  double weight = 1.0;
  double mu = 0.0;
  double sigma = 1.0;

  friend bool operator==(const Component&, const Component&) = default;
};

inline constexpr double kWeightSumTolerance = 1e-12;

// Finite mixture parameter vector theta. Validated on construction and
// immutable afterwards.
class MixtureParams {
public:
  explicit MixtureParams(std::vector<Component> components) : components_(std::move(components)) {
    if (components_.empty()) throw validation_error("mixture: at least one component required");
    double total = 0.0;
    for (std::size_t m = 0; m < components_.size(); ++m) {
      const Component& c = components_[m];
      const std::string where = "components[" + std::to_string(m) + "]";
      if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
        throw validation_error(where + ".weight: must be a finite nonnegative number");
      if (!std::isfinite(c.mu)) throw validation_error(where + ".mu: must be finite");
      if (!(c.sigma > 0.0) || !std::isfinite(c.sigma))
        throw validation_error(where + ".sigma: must be finite and positive");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > kWeightSumTolerance)
      throw validation_error("mixture: weights sum to " + std::to_string(total) + ", expected 1");
  }

  std::size_t size() const noexcept { return components_.size(); }
  const Component& operator[](std::size_t m) const { return components_[m]; }
  std::span<const Component> components() const noexcept { return components_; }
  auto begin() const noexcept { return components_.begin(); }
  auto end() const noexcept { return components_.end(); }

  // sigma_(1) and sigma_(M)
  double min_sigma() const {
    return std::min_element(begin(), end(), by_sigma)->sigma;
  }
  double max_sigma() const {
    return std::max_element(begin(), end(), by_sigma)->sigma;
  }

  // Copy with scales replaced; weights/locations/families kept.
  MixtureParams with_sigmas(std::span<const double> sigmas) const {
    if (sigmas.size() != size()) throw validation_error("with_sigmas: size mismatch");
    std::vector<Component> out = components_;
    for (std::size_t m = 0; m < out.size(); ++m) out[m].sigma = sigmas[m];
    return MixtureParams(std::move(out));
  }

  friend bool operator==(const MixtureParams&, const MixtureParams&) = default;

private:
  static bool by_sigma(const Component& a, const Component& b) { return a.sigma < b.sigma; }

  std::vector<Component> components_;
};

// MixtureParams with weights 1/M from (family, mu, sigma) triples.
inline MixtureParams equal_weight_mixture(std::vector<Component> components) {
  const double w = 1.0 / static_cast<double>(components.size());
  for (Component& c : components) c.weight = w;
  return MixtureParams(std::move(components));
}

// log(alpha) + log((1/sigma) f((x - mu)/sigma)), evaluated without forming
// the density so scales down to 1e-300 do not overflow.
inline double component_logpdf(const Component& c, double x) {
  const double z = (x - c.mu) / c.sigma;
  return std::log(c.weight) + standard_logpdf(c.family, z) - std::log(c.sigma);
}

// log f(x; theta) by max-shifted log-sum-exp. Returns -infinity when every
// weighted component density is zero at x.
inline double mixture_logpdf(const MixtureParams& theta, double x) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double terms[16];
  std::vector<double> heap;
  double* t = terms;
  if (theta.size() > 16) {
    heap.resize(theta.size());
    t = heap.data();
  }
  std::size_t k = 0;
  double top = kNegInf;
  for (const Component& c : theta) {
    if (c.weight <= 0.0) continue;
    const double v = component_logpdf(c, x);
    t[k++] = v;
    top = std::max(top, v);
  }
  if (top == kNegInf) return kNegInf;
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += std::exp(t[i] - top);
  return top + std::log(acc);
}

inline double loglik(const MixtureParams& theta, std::span<const double> data) {
  if (data.empty()) throw validation_error("loglik: data must be nonempty");
  double total = 0.0;
  for (double x : data) {
    const double v = mixture_logpdf(theta, x);
    if (v == -std::numeric_limits<double>::infinity()) return v;
    total += v;
  }
  return total;
}

// i.i.d. draws from theta using the caller's generator.
inline std::vector<double> sample(const MixtureParams& theta, std::size_t n, Rng& rng) {
  if (n == 0) throw validation_error("sample: n must be at least 1");
  std::vector<double> cumulative;
  cumulative.reserve(theta.size());
  double acc = 0.0;
  for (const Component& c : theta) cumulative.push_back(acc += c.weight);

  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    std::size_t m = 0;
    while (m + 1 < theta.size() && (u >= cumulative[m] || theta[m].weight <= 0.0)) ++m;
    const Component& c = theta[m];
    out.push_back(c.mu + c.sigma * sample_standard(c.family, rng));
  }
  return out;
}

inline std::vector<double> sample(const MixtureParams& theta, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample(theta, n, rng);
}

} // namespace ratio_mle
