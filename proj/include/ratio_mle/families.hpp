#pragma once

// Standard (location 0, scale 1) component densities and their tail
// envelopes f(z) <= min{v0, v1 |z|^-beta}.

#include <array>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>

#include "ratio_mle/errors.hpp"
#include "ratio_mle/rng.hpp"

namespace ratio_mle {

enum class Family { Normal, Laplace, Logistic, Uniform };

inline constexpr std::array<Family, 4> kAllFamilies = {Family::Normal, Family::Laplace,
                                                       Family::Logistic, Family::Uniform};

inline constexpr double kEnvelopeBeta = 4.0;

// Envelope constants certified analytically for each family.
struct EnvelopeConstants {
  double v0;
  double v1;
  double beta;
};

struct ComponentFamily {
  Family id;
  EnvelopeConstants envelope;
};

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::Normal: return "normal";
    case Family::Laplace: return "laplace";
    case Family::Logistic: return "logistic";
    case Family::Uniform: return "uniform";
  }
  throw validation_error("unsupported family id " + std::to_string(static_cast<int>(f)));
}

inline Family family_from_string(std::string_view name) {
  for (Family f : kAllFamilies)
    if (to_string(f) == name) return f;
  throw validation_error("unknown family \"" + std::string(name) +
                         "\" (expected normal, laplace, logistic or uniform)");
}

namespace detail {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Maximizer of z^4 * logistic(z): root of z * tanh(z/2) = 4.
inline double logistic_envelope_argmax() {
  static const double z = [] {
    double x = 4.0;
    for (int i = 0; i < 60; ++i) {
      const double t = std::tanh(0.5 * x);
      const double g = x * t - 4.0;
      const double dg = t + 0.5 * x * (1.0 - t * t);
      const double step = g / dg;
      x -= step;
      if (std::abs(step) < 1e-15 * x) break;
    }
    return x;
  }();
  return z;
}

} // namespace detail

inline double standard_logpdf(Family f, double z) {
  switch (f) {
    case Family::Normal: return -0.5 * z * z - detail::kLogSqrt2Pi;
    case Family::Laplace: return -std::abs(z) - std::numbers::ln2;
    case Family::Logistic: {
      const double a = std::abs(z);
      return -a - 2.0 * std::log1p(std::exp(-a));
    }
    case Family::Uniform:
      return std::abs(z) <= 0.5 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  throw validation_error("unsupported family id " + std::to_string(static_cast<int>(f)));
}

// Each density is formed so that its value at 0 equals v0 bit for bit.
inline double standard_pdf(Family f, double z) {
  switch (f) {
    case Family::Normal: return detail::kInvSqrt2Pi * std::exp(-0.5 * z * z);
    case Family::Laplace: return 0.5 * std::exp(-std::abs(z));
    case Family::Logistic: {
      const double e = std::exp(-std::abs(z));
      return e / ((1.0 + e) * (1.0 + e));
    }
    case Family::Uniform: return std::abs(z) <= 0.5 ? 1.0 : 0.0;
  }
  throw validation_error("unsupported family id " + std::to_string(static_cast<int>(f)));
}

// v0 = sup f, v1 = sup |z|^4 f(z); the sup is attained at
//   normal    z^2 = 4
//   laplace   |z| = 4
//   logistic  z tanh(z/2) = 4
//   uniform   |z| = 1/2
inline EnvelopeConstants envelope_constants(Family f) {
  constexpr double beta = kEnvelopeBeta;
  switch (f) {
    case Family::Normal: {
      const double v0 = detail::kInvSqrt2Pi;
      return {v0, 16.0 * std::exp(-2.0) * v0, beta};
    }
    case Family::Laplace: return {0.5, 128.0 * std::exp(-4.0), beta};
    case Family::Logistic: {
      const double z = detail::logistic_envelope_argmax();
      return {0.25, z * z * z * z * standard_pdf(Family::Logistic, z), beta};
    }
    case Family::Uniform: return {1.0, 0.0625, beta};
  }
  throw validation_error("unsupported family id " + std::to_string(static_cast<int>(f)));
}

inline ComponentFamily component_family(Family f) { return {f, envelope_constants(f)}; }

inline double sample_standard(Family f, Rng& rng) {
  switch (f) {
    case Family::Normal: return rng.normal();
    case Family::Laplace: {
      const double u = rng.uniform();
      return u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
    }
    case Family::Logistic: {
      const double u = rng.uniform();
      return std::log(u) - std::log1p(-u);
    }
    case Family::Uniform: return rng.uniform() - 0.5;
  }
  throw validation_error("unsupported family id " + std::to_string(static_cast<int>(f)));
}

// Half-width at which the plateau v0/sigma meets the tail bound v0*sigma.
inline double nu(const EnvelopeConstants& env, double sigma) {
  if (!(sigma > 0.0)) throw validation_error("nu: sigma must be positive");
  return std::pow(env.v1 / env.v0, 1.0 / env.beta) * std::pow(sigma, 1.0 - 2.0 / env.beta);
}

inline double nu(Family f, double sigma) { return nu(envelope_constants(f), sigma); }

// (1/sigma) f((x - mu)/sigma)
inline double scaled_pdf(Family f, double x, double mu, double sigma) {
  return standard_pdf(f, (x - mu) / sigma) / sigma;
}

// Step function dominating scaled_pdf(f, ., mu, sigma).
inline double step_bound(Family f, double x, double mu, double sigma) {
  if (!(sigma > 0.0)) throw validation_error("step_bound: sigma must be positive");
  const EnvelopeConstants env = envelope_constants(f);
  const double tail = env.v0 * sigma;
  if (std::abs(x - mu) <= nu(env, sigma)) return std::max(env.v0 / sigma, tail);
  return tail;
}

} // namespace ratio_mle
