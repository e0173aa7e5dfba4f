#pragma once

#include "hypok/linalg.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace hypok {

/// Nodes and weights of a one-dimensional quadrature rule.
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

namespace detail {

// Golub–Welsch: nodes are eigenvalues of the Jacobi matrix, weights come from
// the first components of its eigenvectors.
inline Rule1D golub_welsch(const std::vector<double>& diag, const std::vector<double>& offdiag_sq,
                           double mu0) {
  const int n = static_cast<int>(diag.size());
  Mat j = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) j(k, k) = diag[k];
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(offdiag_sq[k]);
    j(k, k - 1) = b;
    j(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(j);
  Rule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    r.nodes[k] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    r.weights[k] = mu0 * v0 * v0;
  }
  return r;
}

template <class Key, class Make>
const Rule1D& cached_rule(const Key& key, Make make) {
  static std::mutex mu;
  static std::map<Key, Rule1D> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, make()).first;
  return it->second;
}

}  // namespace detail

/// Gauss–Hermite rule for the weight e^{-x^2} on the real line.
inline const Rule1D& gauss_hermite(int n) {
  if (n < 1) throw DomainError("gauss_hermite: order must be positive");
  return detail::cached_rule(std::make_tuple(0, n, 0.0, 0.0), [n] {
    std::vector<double> a(n, 0.0), b(n, 0.0);
    for (int k = 1; k < n; ++k) b[k] = 0.5 * k;
    return detail::golub_welsch(a, b, std::sqrt(kPi));
  });
}

/// Gauss–Legendre rule on [-1, 1].
inline const Rule1D& gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: order must be positive");
  return detail::cached_rule(std::make_tuple(1, n, 0.0, 0.0), [n] {
    std::vector<double> a(n, 0.0), b(n, 0.0);
    for (int k = 1; k < n; ++k) b[k] = double(k) * k / (4.0 * k * k - 1.0);
    return detail::golub_welsch(a, b, 2.0);
  });
}

/// Generalized Gauss–Laguerre rule for the weight x^alpha e^{-x} on (0, inf).
inline const Rule1D& gauss_laguerre(int n, double alpha) {
  if (n < 1 || alpha <= -1.0) throw DomainError("gauss_laguerre: need n >= 1 and alpha > -1");
  return detail::cached_rule(std::make_tuple(2, n, alpha, 0.0), [n, alpha] {
    std::vector<double> a(n), b(n, 0.0);
    for (int k = 0; k < n; ++k) a[k] = 2.0 * k + alpha + 1.0;
    for (int k = 1; k < n; ++k) b[k] = k * (k + alpha);
    return detail::golub_welsch(a, b, std::tgamma(alpha + 1.0));
  });
}

/// Gauss–Jacobi rule for the weight (1-x)^alpha (1+x)^beta on [-1, 1].
inline const Rule1D& gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1 || alpha <= -1.0 || beta <= -1.0)
    throw DomainError("gauss_jacobi: need n >= 1 and alpha, beta > -1");
  return detail::cached_rule(std::make_tuple(3, n, alpha, beta), [n, alpha, beta] {
    std::vector<double> a(n), b(n, 0.0);
    const double ab = alpha + beta;
    for (int k = 0; k < n; ++k) {
      const double s = 2.0 * k + ab;
      a[k] = (k == 0) ? (beta - alpha) / (ab + 2.0)
                      : (beta * beta - alpha * alpha) / (s * (s + 2.0));
    }
    for (int k = 1; k < n; ++k) {
      const double s = 2.0 * k + ab;
      const double num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
      b[k] = (k == 1) ? 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab))
                      : num / (s * s * (s + 1.0) * (s - 1.0));
    }
    const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) +
                                std::lgamma(beta + 1.0) - std::lgamma(ab + 2.0));
    return detail::golub_welsch(a, b, mu0);
  });
}

/// Composite Gauss–Legendre rule on [a, b] split at the given breakpoints.
/// Breakpoints outside (a, b) are ignored.
inline Rule1D composite_legendre(double a, double b, int panels, int order,
                                 const std::vector<double>& breaks = {}) {
  std::vector<double> cuts{a};
  for (int k = 1; k < panels; ++k) cuts.push_back(a + (b - a) * k / panels);
  for (double c : breaks)
    if (c > a && c < b) cuts.push_back(c);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  const Rule1D& gl = gauss_legendre(order);
  Rule1D r;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double lo = cuts[p], hi = cuts[p + 1];
    if (hi <= lo) continue;
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (std::size_t k = 0; k < gl.size(); ++k) {
      r.nodes.push_back(mid + half * gl.nodes[k]);
      r.weights.push_back(half * gl.weights[k]);
    }
  }
  return r;
}

/// Gauss–Legendre panels on [a, b] whose widths grow geometrically away from
/// both ends; suited to integrands with endpoint singularities.
inline Rule1D graded_legendre(double a, double b, int levels, int order, double ratio = 0.5) {
  std::vector<double> breaks;
  const double half = 0.5 * (b - a);
  double w = half;
  for (int l = 0; l < levels; ++l) {
    w *= ratio;
    breaks.push_back(a + w);
    breaks.push_back(b - w);
  }
  return composite_legendre(a, b, 2, order, breaks);
}

/// Rule for integrals over t in [t_min, t_max] performed in the variable
/// u = log t with composite Gauss–Legendre panels. Weights include the
/// Jacobian, so sum_i w_i g(t_i) approximates the t-integral of g.
inline Rule1D log_time_rule(double t_min, double t_max, double panel_width = 1.0, int order = 16) {
  if (!(t_min > 0.0) || !(t_max > t_min)) throw DomainError("log_time_rule: need 0 < t_min < t_max");
  const double u0 = std::log(t_min), u1 = std::log(t_max);
  const int panels = std::max(1, static_cast<int>(std::ceil((u1 - u0) / panel_width)));
  Rule1D r = composite_legendre(u0, u1, panels, order);
  for (std::size_t k = 0; k < r.size(); ++k) {
    r.nodes[k] = std::exp(r.nodes[k]);
    r.weights[k] *= r.nodes[k];
  }
  return r;
}

/// Calls fn(u, w) for every node of the tensor Gauss–Hermite rule in `dim`
/// dimensions, with weights normalized so they sum to one (the standard
/// Gaussian measure with covariance I/2).
template <class Fn>
void for_each_hermite_node(int dim, int order, Fn&& fn) {
  if (dim < 1) throw DomainError("for_each_hermite_node: dim must be positive");
  const Rule1D& gh = gauss_hermite(order);
  const double norm = 1.0 / std::sqrt(kPi);
  std::vector<int> idx(dim, 0);
  Vec u(dim);
  while (true) {
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      u(d) = gh.nodes[idx[d]];
      w *= gh.weights[idx[d]] * norm;
    }
    fn(static_cast<const Vec&>(u), w);
    int d = 0;
    while (d < dim && ++idx[d] == order) idx[d++] = 0;
    if (d == dim) break;
  }
}

/// Calls fn(x, w) for every node of a tensor rule built from per-axis rules.
template <class Fn>
void for_each_tensor_node(const std::vector<Rule1D>& axes, Fn&& fn) {
  const int dim = static_cast<int>(axes.size());
  std::vector<std::size_t> idx(dim, 0);
  Vec x(dim);
  for (const auto& a : axes)
    if (a.size() == 0) return;
  while (true) {
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      x(d) = axes[d].nodes[idx[d]];
      w *= axes[d].weights[idx[d]];
    }
    fn(static_cast<const Vec&>(x), w);
    int d = 0;
    while (d < dim && ++idx[d] == axes[d].size()) idx[d++] = 0;
    if (d == dim) break;
  }
}

}  // namespace hypok
