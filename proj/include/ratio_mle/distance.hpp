#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ratio_mle/errors.hpp"
#include "ratio_mle/mixture.hpp"

namespace ratio_mle {

inline constexpr double kSmallWeight = 1e-6;

// Distance between the label-permutation orbits of two parameter vectors:
// min over permutations of the Euclidean distance on (alpha, mu, sigma).
// When either matched weight is below small_weight only the weights are
// compared, since location and scale of a vanishing component are
// unidentified.
inline double param_distance(const MixtureParams& a, const MixtureParams& b,
                             double small_weight = kSmallWeight) {
  if (a.size() != b.size()) throw validation_error("param_distance: component counts differ");
  const std::size_t M = a.size();
  if (M > 9) throw validation_error("param_distance: at most 9 components supported");

  std::vector<std::size_t> perm(M);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double sq = 0.0;
    for (std::size_t m = 0; m < M && sq < best; ++m) {
      const Component& p = a[m];
      const Component& q = b[perm[m]];
      const double dw = p.weight - q.weight;
      sq += dw * dw;
      if (p.weight >= small_weight && q.weight >= small_weight) {
        const double dm = p.mu - q.mu;
        const double ds = p.sigma - q.sigma;
        sq += dm * dm + ds * ds;
      }
    }
    best = std::min(best, sq);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best);
}

} // namespace ratio_mle
