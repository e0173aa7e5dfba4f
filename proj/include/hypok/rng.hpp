#pragma once

#include "hypok/linalg.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cstdint>
#include <vector>

namespace hypok {

/// Counter-based generator: the k-th draw of stream s is a pure function of
/// (seed, s, k), so results do not depend on evaluation order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits(std::uint64_t counter) const {
    return mix(mix(seed_ ^ mix(stream_ + 0x632be59bd9b4e019ULL)) + counter);
  }

  /// Uniform draw in the open interval (0, 1).
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

/// Inverse of the standard normal CDF.
inline double normal_quantile(double p) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

/// Kronecker (additive recurrence) low-discrepancy sequence in [0,1)^d with a
/// Cranley–Patterson shift; independent shifts give a randomized QMC estimator.
class KroneckerSequence {
 public:
  KroneckerSequence(int dim, const CounterRng& rng, std::uint64_t shift_id) : alpha_(dim), shift_(dim) {
    // phi_d is the unique positive root of x^{d+1} = x + 1.
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1.0));
    for (int d = 0; d < dim; ++d) {
      alpha_(d) = std::fmod(std::pow(1.0 / phi, d + 1.0), 1.0);
      shift_(d) = rng.uniform(shift_id * 64 + d);
    }
  }

  /// Writes the k-th point into x (entries strictly inside (0,1)).
  void point(std::uint64_t k, Vec& x) const {
    x.resize(alpha_.size());
    for (int d = 0; d < alpha_.size(); ++d) {
      double v = std::fmod(shift_(d) + static_cast<double>(k) * alpha_(d), 1.0);
      x(d) = std::clamp(v, 1e-16, 1.0 - 1e-16);
    }
  }

 private:
  Vec alpha_;
  Vec shift_;
};

/// Mean and standard error of a sample of independent replicate estimates.
struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline Estimate replicate_estimate(const std::vector<double>& reps) {
  Estimate e;
  const double n = static_cast<double>(reps.size());
  if (reps.empty()) return e;
  for (double r : reps) e.mean += r;
  e.mean /= n;
  if (reps.size() > 1) {
    double ss = 0.0;
    for (double r : reps) ss += (r - e.mean) * (r - e.mean);
    e.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}

}  // namespace hypok
