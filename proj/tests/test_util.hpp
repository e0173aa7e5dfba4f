#pragma once

#include "hypok/hypok.hpp"

#include <initializer_list>

namespace hypok::test {

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline Vec random_point(const CounterRng& rng, std::uint64_t c, int dim, double scale = 1.0) {
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x(i) = scale * (2.0 * rng.uniform(c + i) - 1.0);
  return x;
}

inline std::vector<OperatorSpec> presets() {
  return {OperatorSpec::heat(2), OperatorSpec::kolmogorov(1), OperatorSpec::ornstein_uhlenbeck(2)};
}

}  // namespace hypok::test
