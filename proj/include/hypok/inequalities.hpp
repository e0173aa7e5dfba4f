#pragma once

#include "hypok/check.hpp"
#include "hypok/semigroup.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <vector>

namespace hypok {

/// ∫|f(Y) − P_t f(X)|² p(X,Y,t) dY ≤ 2t ∫⟨K(t)∇f, ∇f⟩ p(X,Y,t) dY.
inline InequalityCheck gaussian_poincare_check(const OperatorSpec& spec, const TestFunction& f, double t,
                                               const Vec& x, const QuadratureSpec& quad = {}) {
  if (!(t > 0.0)) throw DomainError("gaussian_poincare_check: t must be positive");
  const KernelAtTime k(spec, t);
  const Mat& kt = k.gramians().K_t;
  const int o1 = gh_order_for(k, f, quad.gh_order), o2 = gh_order_for(k, f, quad.gh_order, 2.0);
  const double mean = gh_expectation(k, x, o1, [&](const Vec& y) { return f.eval(y); });
  const double lhs = gh_expectation(k, x, o2, [&](const Vec& y) {
    const double d = f.eval(y) - mean;
    return d * d;
  });
  const double energy = gh_expectation(k, x, o2, [&](const Vec& y) {
    const Vec g = f.gradient(y);
    return g.dot(kt * g);
  });
  return make_check("gaussian_poincare", lhs, 2.0 * t * energy, 0.0, {{"t", t}});
}

/// P_t(f²)(X) − (P_t f(X))², the variance form of the Poincaré left side.
inline double semigroup_variance(const OperatorSpec& spec, const TestFunction& f, double t, const Vec& x,
                                 const QuadratureSpec& quad = {}) {
  if (!(t > 0.0)) throw DomainError("semigroup_variance: t must be positive");
  const KernelAtTime k(spec, t);
  const double m1 = gh_expectation(k, x, gh_order_for(k, f, quad.gh_order), [&](const Vec& y) { return f.eval(y); });
  const double m2 = gh_expectation(k, x, gh_order_for(k, f, quad.gh_order, 2.0), [&](const Vec& y) {
    const double v = f.eval(y);
    return v * v;
  });
  return m2 - m1 * m1;
}

/// Ellipsoid {Y : ⟨K(t)⁻¹(Y − e^{tB}X), Y − e^{tB}X⟩ < r²}.
struct PseudoBall {
  Vec center;
  Mat sqrt_K;
  Mat inv_K;
  double radius = 0.0;
  double volume = 0.0;

  PseudoBall(const OperatorSpec& spec, const Vec& x, double r, double t) : radius(r) {
    if (!(r > 0.0) || !(t > 0.0)) throw DomainError("pseudo ball: r and t must be positive");
    const auto g = gramians(spec, t, true, false);
    center = g.exp_tB * x;
    sqrt_K = sym_sqrt(g.K_t);
    inv_K = g.inv_K_t;
    volume = unit_ball_volume(spec.dim) * std::pow(r, spec.dim) * std::sqrt(g.K_t.determinant());
  }

  /// Image of a point of the unit ball.
  Vec map(const Vec& v) const { return center + radius * (sqrt_K * v); }

  double gauge(const Vec& y) const {
    const Vec d = y - center;
    return std::sqrt(std::max(0.0, d.dot(inv_K * d))) / radius;
  }
};

namespace detail {

// Uniform point of the unit ball from dim + 1 uniforms starting at counter c.
inline Vec uniform_ball_point(int dim, const CounterRng& rng, std::uint64_t c) {
  Vec z(dim);
  for (int d = 0; d < dim; ++d) z(d) = normal_quantile(rng.uniform(c + d));
  const double nz = z.norm();
  const double rad = std::pow(rng.uniform(c + dim), 1.0 / dim);
  return nz > 0.0 ? Vec(z * (rad / nz)) : Vec(Vec::Zero(dim));
}

// Throws unless the bump's outer ball lies inside `ball`. The A-norm triangle
// inequality settles most cases; otherwise boundary points are tested.
inline void require_support_inside(const OperatorSpec& spec, const Vec& x, double r, const CompactBump& bump,
                                   const PseudoBall& ball) {
  const int n = spec.dim;
  const Vec d = bump.center - ball.center;
  const double lam = max_eigenvalue(ball.inv_K);
  if (std::sqrt(d.dot(ball.inv_K * d)) + bump.outer_radius * std::sqrt(lam) < ball.radius) return;
  const double t = 4.0 * r * r;
  auto check = [&](const Vec& v) {
    if (!pseudo_ball_contains(spec, x, 2.0 * r, t, bump.center + bump.outer_radius * v))
      throw PreconditionError("local_poincare_check: bump support leaks outside B_{4r^2}(X, 2r)");
  };
  if (n == 1) {
    check(Vec::Constant(1, 1.0));
    check(Vec::Constant(1, -1.0));
    return;
  }
  if (n == 2) {
    for (int i = 0; i < 1024; ++i) {
      const double a = 2.0 * kPi * i / 1024.0;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      check(v);
    }
    return;
  }
  const CounterRng rng(0x5eed, 77);
  for (int i = 0; i < 4096; ++i) {
    Vec z(n);
    for (int k = 0; k < n; ++k) z(k) = normal_quantile(rng.uniform(static_cast<std::uint64_t>(i) * n + k));
    check(z.normalized());
  }
}

template <class Fn>
ValueWithError batched_ball_mean(const PseudoBall& ball, int dim, std::uint64_t samples, const CounterRng& rng,
                                 Fn&& batch_stat) {
  constexpr int kBatches = 16;
  const std::uint64_t per = std::max<std::uint64_t>(64, samples / kBatches);
  std::vector<double> est(kBatches);
  std::vector<Vec> pts(per);
  for (int b = 0; b < kBatches; ++b) {
    for (std::uint64_t i = 0; i < per; ++i) {
      const std::uint64_t c = (static_cast<std::uint64_t>(b) * per + i) * (dim + 1);
      pts[i] = ball.map(uniform_ball_point(dim, rng, c));
    }
    est[b] = batch_stat(pts);
  }
  ValueWithError r;
  for (double e : est) r.value += e;
  r.value /= kBatches;
  double var = 0.0;
  for (double e : est) var += (e - r.value) * (e - r.value);
  r.stderr_ = std::sqrt(var / (kBatches - 1) / kBatches);
  return r;
}

}  // namespace detail

/// A bump supported inside B_{4r²}(X, 2r): the centre is 2r·K^{1/2}w away from
/// the ball centre and the outer radius fills `fill` of the remaining room.
inline CompactBump bump_in_pseudo_ball(const OperatorSpec& spec, const Vec& x, double r, const Vec& w,
                                       double fill = 0.9) {
  if (!(w.norm() < 1.0)) throw InputError("bump_in_pseudo_ball: offset must lie in the unit ball");
  if (!(fill > 0.0 && fill < 1.0)) throw InputError("bump_in_pseudo_ball: fill must lie in (0, 1)");
  const PseudoBall big(spec, x, 2.0 * r, 4.0 * r * r);
  const Vec c = big.map(w);
  const double room = (1.0 - w.norm()) * big.radius / std::sqrt(max_eigenvalue(big.inv_K));
  const double ro = fill * room;
  return CompactBump(c, 0.5 * ro, ro);
}

/// Random modulated bump for local Poincaré sweeps.
inline LocalizedFunction random_local_bump(const OperatorSpec& spec, const Vec& x, double r, const CounterRng& rng,
                                           std::uint64_t k) {
  const int n = spec.dim;
  const Vec w = detail::uniform_ball_point(n, rng, k * 4096 + 3000) * 0.25;
  LocalizedFunction f;
  f.bump = bump_in_pseudo_ball(spec, x, r, w, 0.6 + 0.3 * rng.uniform(k * 4096 + 3100));
  RandomFunctionOptions opt;
  opt.center_range = 1.0;
  f.modulator = random_test_function(n, rng, k, opt);
  f.modulator.set_polynomial(1.0, Vec::Zero(n), Mat::Zero(n, n));
  return f;
}

/// ∫_{B_{r²}(X,r)} |f − f_r|² ≤ 2e^{1/4} r² ∫_{B_{4r²}(X,2r)} ⟨K(r²)∇f, ∇f⟩ for f
/// supported in the larger pseudo-ball. Uniform sampling of each ellipsoid;
/// f_r uses the same points as the left side.
inline InequalityCheck local_poincare_check(const OperatorSpec& spec, const Vec& x, double r,
                                            const LocalizedFunction& f, const QuadratureSpec& quad = {}) {
  if (!(r > 0.0)) throw DomainError("local_poincare_check: r must be positive");
  const int n = spec.dim;
  if (x.size() != n || f.bump.dim() != n) throw InputError("local_poincare_check: dimension mismatch");
  const double r2 = r * r;
  const PseudoBall small(spec, x, r, r2);
  const PseudoBall big(spec, x, 2.0 * r, 4.0 * r2);
  detail::require_support_inside(spec, x, r, f.bump, big);
  const Mat k_r = gramians(spec, r2, false, false).K_t;
  const CounterRng rng_l(quad.rng_seed, 101), rng_r(quad.rng_seed, 102);

  const auto lhs = detail::batched_ball_mean(small, n, quad.mc_samples, rng_l, [&](const std::vector<Vec>& pts) {
    double s1 = 0.0, s2 = 0.0;
    for (const auto& y : pts) {
      const double v = f.eval(y);
      s1 += v;
      s2 += v * v;
    }
    const double m = s1 / pts.size();
    return small.volume * (s2 / pts.size() - m * m);
  });
  const auto energy = detail::batched_ball_mean(big, n, quad.mc_samples, rng_r, [&](const std::vector<Vec>& pts) {
    double s = 0.0;
    for (const auto& y : pts) {
      const Vec g = f.gradient(y);
      s += g.dot(k_r * g);
    }
    return big.volume * s / pts.size();
  });

  const double c = 2.0 * std::exp(0.25);
  const double rhs = c * r2 * energy.value;
  const double se = std::hypot(lhs.stderr_, c * r2 * energy.stderr_);
  const double ratio = energy.value > 0.0 ? lhs.value / (r2 * energy.value) : 0.0;
  return make_check("local_poincare", lhs.value, rhs, se, {{"r", r}, {"ratio", ratio}, {"constant", c}});
}

/// ⟨Q∇P_τf, ∇P_τf⟩(X) ≤ P_τ(⟨e^{τB}Qe^{τBᵀ}∇f, ∇f⟩)(X), with ∇P_τf = e^{τBᵀ} P_τ(∇f).
inline InequalityCheck bakry_emery_check(const OperatorSpec& spec, const TestFunction& f, double tau,
                                         const Vec& x, const QuadratureSpec& quad = {}) {
  if (!(tau > 0.0)) throw DomainError("bakry_emery_check: tau must be positive");
  const KernelAtTime k(spec, tau);
  const int n = spec.dim;
  const Mat& e = k.gramians().exp_tB;
  const Vec mean_grad =
      gh_expectation_vec(k, x, gh_order_for(k, f, quad.gh_order), n, [&](const Vec& y) { return f.gradient(y); });
  const Vec g = e.transpose() * mean_grad;
  const double lhs = g.dot(spec.Q * g);
  const Mat m = e * spec.Q * e.transpose();
  const double rhs = gh_expectation(k, x, gh_order_for(k, f, quad.gh_order, 2.0), [&](const Vec& y) {
    const Vec gy = f.gradient(y);
    return gy.dot(m * gy);
  });
  return make_check("bakry_emery", lhs, rhs, 0.0, {{"tau", tau}});
}

struct PsiProbe {
  std::vector<double> s;
  std::vector<double> psi;
  double at_zero = 0.0;  ///< (P_t f(X))²
  double at_t = 0.0;     ///< P_t(f²)(X)
  bool nondecreasing = false;
};

/// ψ(s) = P_s((P_{t−s} f)²)(X) at s_i = i t/(n_s + 1), i = 1..n_s.
inline PsiProbe psi_monotonicity_probe(const OperatorSpec& spec, const TestFunction& f, double t, const Vec& x,
                                       int n_s, const QuadratureSpec& quad = {}) {
  if (!(t > 0.0)) throw DomainError("psi_monotonicity_probe: t must be positive");
  if (n_s < 3) throw InputError("psi_monotonicity_probe: need at least 3 nodes");
  const bool exact = f.max_degree() <= 2;
  auto inner = [&](double tt) {
    if (exact) {
      const PropagatedFunction pf(spec, f, tt);
      return std::function<double(const Vec&)>([pf](const Vec& y) { return pf.eval(y); });
    }
    auto k = std::make_shared<KernelAtTime>(spec, tt);
    const int order = gh_order_for(*k, f, quad.gh_order);
    return std::function<double(const Vec&)>([k, &f, order](const Vec& y) {
      return gh_expectation(*k, y, order, [&](const Vec& z) { return f.eval(z); });
    });
  };

  PsiProbe out;
  const double pt = inner(t)(x);
  out.at_zero = pt * pt;
  const KernelAtTime kt(spec, t);
  out.at_t = gh_expectation(kt, x, gh_order_for(kt, f, quad.gh_order, 2.0), [&](const Vec& y) {
    const double v = f.eval(y);
    return v * v;
  });
  double scale = std::max(std::abs(out.at_zero), std::abs(out.at_t));
  for (int i = 1; i <= n_s; ++i) {
    const double s = t * i / (n_s + 1);
    const auto g = inner(t - s);
    const KernelAtTime k(spec, s);
    out.s.push_back(s);
    // The nested case keeps the base order outside to bound the cost.
    const int order = exact ? gh_order_for(k, propagate(spec, f, t - s), quad.gh_order, 2.0) : quad.gh_order;
    out.psi.push_back(gh_expectation(k, x, order, [&](const Vec& y) {
      const double v = g(y);
      return v * v;
    }));
    scale = std::max(scale, std::abs(out.psi.back()));
  }
  const double tol = 1e-9 * scale + 1e-14;
  out.nondecreasing = out.at_zero <= out.psi.front() + tol && out.psi.back() <= out.at_t + tol;
  for (std::size_t i = 1; i < out.psi.size(); ++i)
    out.nondecreasing = out.nondecreasing && out.psi[i - 1] <= out.psi[i] + tol;
  return out;
}

}  // namespace hypok
