#pragma once

#include "hypok/semigroup.hpp"

namespace hypok {

/// Parameters of the singular time integrals.
struct FracParams {
  double s = 0.5;
  double alpha = 1.0;
  double t_split = 1.0;   ///< extra panel break of the log-time grid
  double tail_cap = 1e10;
  double t_min = 1e-10;
  double panel_width = 1.0;  ///< width of the Gauss–Legendre panels in log t
  int panel_order = 10;

  void validate() const {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("FracParams: s must lie in (0, 1)");
    if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("FracParams: alpha must lie in (0, 2)");
    if (!(t_min > 0.0) || !(tail_cap > t_min) || !(t_split > 0.0))
      throw DomainError("FracParams: need 0 < t_min < tail_cap and t_split > 0");
    if (!(panel_width > 0.0) || panel_order < 2) throw DomainError("FracParams: invalid panel layout");
  }
};

/// Result of a singular time integral together with a bound on the part
/// beyond the cap that was extrapolated rather than integrated.
struct FracResult {
  double value = 0.0;
  double tail_bound = 0.0;
};

inline double balakrishnan_constant(double s) { return s / std::tgamma(1.0 - s); }

namespace detail {

inline Rule1D frac_time_rule(const FracParams& p) {
  const double split = std::clamp(p.t_split, p.t_min * 2.0, p.tail_cap / 2.0);
  Rule1D lo = log_time_rule(p.t_min, split, p.panel_width, p.panel_order);
  const Rule1D hi = log_time_rule(split, p.tail_cap, p.panel_width, p.panel_order);
  lo.nodes.insert(lo.nodes.end(), hi.nodes.begin(), hi.nodes.end());
  lo.weights.insert(lo.weights.end(), hi.weights.begin(), hi.weights.end());
  return lo;
}

// Power-law model g(t) ≈ A (t + shift)^{-κ} fitted at cap/e and cap; κ is
// zero when g does not decay monotonically there.
struct TailModel {
  double g_cap = 0.0;
  double kappa = 0.0;
};

template <class G>
TailModel fit_tail(G&& g, double cap, double shift) {
  TailModel m;
  m.g_cap = g(cap);
  const double prev = g(cap / std::numbers::e);
  if (prev == 0.0 || m.g_cap == 0.0 || (prev > 0.0) != (m.g_cap > 0.0)) return m;
  m.kappa = std::max(0.0, std::log(std::abs(prev) / std::abs(m.g_cap)) /
                              std::log((cap + shift) / (cap / std::numbers::e + shift)));
  return m;
}

// ∫_cap^∞ t^{β-1} A (t + shift)^{-κ} dt with A fixed by g(cap); needs κ > β.
// With t = cap / w this is cap^β g(cap) ∫_0^1 w^{κ-β-1} ((1+σ)/(1+σw))^{κ} dw,
// σ = shift / cap, integrated by Gauss–Jacobi.
inline double tail_integral(const TailModel& m, double cap, double shift, double beta) {
  if (m.g_cap == 0.0) return 0.0;
  const double b = m.kappa - beta - 1.0;
  const double sigma = shift / cap;
  const Rule1D& gj = gauss_jacobi(20, 0.0, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < gj.size(); ++i) {
    const double w = 0.5 * (1.0 + gj.nodes[i]);
    acc += gj.weights[i] * std::pow((1.0 + sigma) / (1.0 + sigma * w), m.kappa);
  }
  return std::pow(cap, beta) * m.g_cap * std::pow(2.0, -b - 1.0) * acc;
}

// ∫_0^∞ t^{-1-s} [g(t) - g0] dt for g(t) = g0 + g1 t + O(t²) near zero.
// [0, t_min] uses the linear term, [t_min, cap] log-time Gauss–Legendre, and
// beyond the cap g is extrapolated as a power law in t + shift.
template <class G>
FracResult balakrishnan_integral(G&& g, double g0, double g1, double s, const FracParams& p, double shift = 0.0) {
  const Rule1D rule = frac_time_rule(p);
  double acc = g1 * std::pow(p.t_min, 1.0 - s) / (1.0 - s);
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double t = rule.nodes[k];
    acc += rule.weights[k] * std::pow(t, -1.0 - s) * (g(t) - g0);
  }
  const double cap = p.tail_cap;
  const TailModel m = fit_tail(g, cap, shift);
  const double cs = std::pow(cap, -s);
  acc += -g0 * cs / s + tail_integral(m, cap, shift, -s);
  return {acc, std::abs(m.g_cap) * cs / s};
}

// ∫_0^∞ t^{β-1} g(t) dt for β > 0 and g decaying faster than t^{-β}.
template <class G>
FracResult potential_integral(G&& g, double g0, double beta, const FracParams& p, double shift = 0.0) {
  const Rule1D rule = frac_time_rule(p);
  double acc = g0 * std::pow(p.t_min, beta) / beta;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double t = rule.nodes[k];
    acc += rule.weights[k] * std::pow(t, beta - 1.0) * g(t);
  }
  const double cap = p.tail_cap;
  const TailModel m = fit_tail(g, cap, shift);
  if (m.g_cap != 0.0 && m.kappa <= beta + 1e-3)
    throw DomainError("riesz_potential: the semigroup decays too slowly for the potential integral to converge");
  const double tail = tail_integral(m, cap, shift, beta);
  acc += tail;
  return {acc, std::abs(tail)};
}

inline void check_order(double s, const char* who) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError(std::string(who) + ": s must lie in (0, 1)");
}

}  // namespace detail

/// (−𝒜)^s f(X) from the Balakrishnan integral
/// −(s/Γ(1−s)) ∫_0^∞ t^{−1−s} [P_t f(X) − f(X)] dt.
inline FracResult fractional_power_detailed(const OperatorSpec& spec, const TestFunction& f, double s,
                                            const Vec& x, const QuadratureSpec& quad = {},
                                            FracParams params = {}) {
  detail::check_order(s, "fractional_power");
  params.s = s;
  params.validate();
  if (!f.is_schwartz()) throw DomainError("fractional_power: f must not have a polynomial part");
  const auto r = detail::balakrishnan_integral([&](double t) { return semigroup_value(spec, f, t, x, quad); },
                                               f.eval(x), f.generator_value(spec, x), s, params);
  const double c = balakrishnan_constant(s);
  return {-c * r.value, c * r.tail_bound};
}

inline double fractional_power(const OperatorSpec& spec, const TestFunction& f, double s, const Vec& x,
                               const QuadratureSpec& quad = {}, const FracParams& params = {}) {
  return fractional_power_detailed(spec, f, s, x, quad, params).value;
}

/// (−𝒜)^s f at many points. The semigroup is propagated once per time node
/// and evaluated at every point, which is much cheaper than repeated calls to
/// fractional_power.
inline std::vector<double> fractional_power_on_grid(const OperatorSpec& spec, const TestFunction& f, double s,
                                                    const std::vector<Vec>& xs, FracParams params = {}) {
  detail::check_order(s, "fractional_power_on_grid");
  params.s = s;
  params.validate();
  if (!f.is_schwartz()) throw DomainError("fractional_power_on_grid: f must not have a polynomial part");
  const std::size_t m = xs.size();
  std::vector<double> out(m, 0.0);
  if (f.max_degree() > 2) {
    for (std::size_t i = 0; i < m; ++i) out[i] = fractional_power(spec, f, s, xs[i], {}, params);
    return out;
  }
  std::vector<double> f0(m);
  for (std::size_t i = 0; i < m; ++i) {
    f0[i] = f.eval(xs[i]);
    out[i] = f.generator_value(spec, xs[i]) * std::pow(params.t_min, 1.0 - s) / (1.0 - s);
  }
  const Rule1D rule = detail::frac_time_rule(params);
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double t = rule.nodes[k];
    const PropagatedFunction pt(spec, f, t);
    const double w = rule.weights[k] * std::pow(t, -1.0 - s);
    for (std::size_t i = 0; i < m; ++i) out[i] += w * (pt.eval(xs[i]) - f0[i]);
  }
  const double cap = params.tail_cap;
  const PropagatedFunction p_cap(spec, f, cap), p_prev(spec, f, cap / std::numbers::e);
  const double c = balakrishnan_constant(s);
  for (std::size_t i = 0; i < m; ++i) {
    const double vc = p_cap.eval(xs[i]), vp = p_prev.eval(xs[i]);
    const detail::TailModel tm = detail::fit_tail([&](double t) { return t == cap ? vc : vp; }, cap, 0.0);
    out[i] += -f0[i] * std::pow(cap, -s) / s + detail::tail_integral(tm, cap, 0.0, -s);
    out[i] *= -c;
  }
  return out;
}

/// Options of the principal-value quadrature behind the classical oracle.
struct RieszOracleOptions {
  int angular = 64;        ///< trapezoid nodes in the azimuth (N ≥ 2)
  int polar = 32;          ///< Gauss–Legendre nodes in cos θ (N = 3)
  int radial_order = 16;
  int graded_levels = 14;  ///< dyadic panels towards the origin of the inner ball
};

/// Classical fractional Laplacian of the heat case,
/// −c_{N,s} PV ∫ (f(Y) − f(X)) |Y − X|^{−N−2s} dY with
/// c_{N,s} = s 4^s Γ(N/2+s) / (π^{N/2} Γ(1−s)).
///
/// Inside the ball of radius δ the quadratic Taylor polynomial at X is
/// subtracted; its even part is integrated analytically and its odd part
/// cancels on the symmetric direction set.
inline double classical_frac_laplacian_oracle(const OperatorSpec& spec, const TestFunction& f, double s,
                                              const Vec& x, const RieszOracleOptions& opt = {}) {
  detail::check_order(s, "classical_frac_laplacian_oracle");
  const int n = spec.dim;
  if (!spec.B.isZero(0.0) || !spec.Q.isApprox(Mat::Identity(n, n)))
    throw UnsupportedError("classical_frac_laplacian_oracle: only the heat operator (Q = I, B = 0) is supported");
  if (n > 3) throw UnsupportedError("classical_frac_laplacian_oracle: N <= 3 required");
  if (!f.is_schwartz()) throw DomainError("classical_frac_laplacian_oracle: f must not have a polynomial part");

  // Directions on the unit sphere with weights summing to its area.
  std::vector<Vec> dirs;
  std::vector<double> dw;
  if (n == 1) {
    dirs = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
    dw = {1.0, 1.0};
  } else {
    const int m = opt.angular + opt.angular % 2;
    std::vector<std::pair<double, double>> mu{{0.0, 2.0}};
    if (n == 3) {
      const Rule1D& gl = gauss_legendre(opt.polar);
      mu.clear();
      for (std::size_t i = 0; i < gl.size(); ++i) mu.emplace_back(gl.nodes[i], gl.weights[i]);
    }
    for (const auto& [c, wc] : mu) {
      const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
      for (int k = 0; k < m; ++k) {
        const double phi = 2.0 * kPi * k / m;
        Vec d(n);
        if (n == 2) {
          d << std::cos(phi), std::sin(phi);
          dw.push_back(2.0 * kPi / m);
        } else {
          d << sn * std::cos(phi), sn * std::sin(phi), c;
          dw.push_back(wc * 2.0 * kPi / m);
        }
        dirs.push_back(d);
      }
    }
  }

  double lmax = 0.0;
  for (const auto& t : f.terms()) lmax = std::max(lmax, max_eigenvalue(t.shape));
  const double ell = lmax > 0.0 ? 1.0 / std::sqrt(lmax) : 1.0;
  const double delta = std::min(1.0, 0.5 * ell);

  const double f0 = f.eval(x);
  const Vec g0 = f.gradient(x);
  const Mat h0 = f.hessian(x);

  std::vector<double> breaks;
  for (int l = 1; l <= opt.graded_levels; ++l) breaks.push_back(std::ldexp(delta, -l));
  const double r0 = breaks.back();
  const Rule1D inner = composite_legendre(r0, delta, 1, opt.radial_order, breaks);

  double acc = 0.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const Vec& th = dirs[i];
    const double gth = g0.dot(th), hth = th.dot(h0 * th);
    double line = 0.0;
    for (std::size_t k = 0; k < inner.size(); ++k) {
      const double r = inner.nodes[k];
      const double rem = f.eval(x + r * th) - f0 - r * gth - 0.5 * r * r * hth;
      line += inner.weights[k] * rem * std::pow(r, -1.0 - 2.0 * s);
    }
    acc += dw[i] * line;
  }
  const double sphere = unit_sphere_area(n);
  acc += 0.5 * h0.trace() * sphere / n * std::pow(delta, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);

  // Outer region: f(X + rθ) out to the farthest corner of the support box.
  const auto [lo, hi] = f.support_box();
  double rmax = delta;
  for (int c = 0; c < (1 << n); ++c) {
    Vec corner(n);
    for (int d = 0; d < n; ++d) corner(d) = (c >> d & 1) ? hi(d) : lo(d);
    rmax = std::max(rmax, (corner - x).norm());
  }
  rmax += ell;
  const int panels = std::max(1, static_cast<int>(std::ceil((rmax - delta) / (0.5 * ell))));
  const Rule1D outer = composite_legendre(delta, rmax, panels, opt.radial_order, {2.0 * delta, 4.0 * delta});
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    double line = 0.0;
    for (std::size_t k = 0; k < outer.size(); ++k) {
      const double r = outer.nodes[k];
      line += outer.weights[k] * f.eval(x + r * dirs[i]) * std::pow(r, -1.0 - 2.0 * s);
    }
    acc += dw[i] * line;
  }
  acc -= f0 * sphere * std::pow(delta, -2.0 * s) / (2.0 * s);

  const double c = s * std::pow(4.0, s) * std::tgamma(0.5 * n + s) / (std::pow(kPi, 0.5 * n) * std::tgamma(1.0 - s));
  return -c * acc;
}

/// ℐ_α f(X) = (1/Γ(α/2)) ∫_0^∞ t^{α/2−1} P_t f(X) dt. The reported tail bound
/// comes from |P_t f| ≤ c_N ‖f‖_1 / V(t) beyond the cap.
inline FracResult riesz_potential_detailed(const OperatorSpec& spec, const TestFunction& f, double alpha,
                                           const Vec& x, const QuadratureSpec& quad = {},
                                           FracParams params = {}) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("riesz_potential: alpha must lie in (0, 2)");
  if (spec.trace_B < 0.0)
    throw DomainError("riesz_potential: trB < 0, V(t) stays bounded and the potential integral does not converge");
  params.alpha = alpha;
  params.validate();
  if (!f.is_schwartz()) throw DomainError("riesz_potential: f must not have a polynomial part");
  const double beta = 0.5 * alpha;
  auto r = detail::potential_integral([&](double t) { return semigroup_value(spec, f, t, x, quad); }, f.eval(x),
                                      beta, params);
  const double cap = params.tail_cap;
  const double v_cap = volume(spec, cap);
  const double kappa_v = std::log(v_cap / volume(spec, cap / std::numbers::e));
  if (kappa_v > beta) {
    const double l1 = lq_norm(f, 1.0);
    r.tail_bound = KernelConstants(spec.dim).c_N * l1 * std::pow(cap, beta) / (v_cap * (kappa_v - beta));
  }
  const double g = std::tgamma(beta);
  return {r.value / g, r.tail_bound / g};
}

inline double riesz_potential(const OperatorSpec& spec, const TestFunction& f, double alpha, const Vec& x,
                              const QuadratureSpec& quad = {}, const FracParams& params = {}) {
  return riesz_potential_detailed(spec, f, alpha, x, quad, params).value;
}

/// Options of the z-integral in the Poisson representation.
struct PoissonFracOptions {
  double z_min = 1e-5;
  double z_max = 1e6;
  double panel_width = 1.0;
  int panel_order = 10;
};

/// (−𝒜)^s f(X) = −(2s/Γ(1−2s)) ∫_0^∞ z^{−1−2s} [𝒫_z f(X) − f(X)] dz, 0 < s < 1/2.
///
/// Near z = 0, 𝒫_z f = f − z g − (z²/2) 𝒜f + O(z³) with g = (−𝒜)^{1/2} f; g is
/// estimated from 𝒫_{z_min} f and the first piece integrated analytically.
inline double fractional_via_poisson(const OperatorSpec& spec, const TestFunction& f, double s, const Vec& x,
                                     const QuadratureSpec& quad = {}, const PoissonFracOptions& opt = {}) {
  if (!(s > 0.0 && s < 0.5)) throw DomainError("fractional_via_poisson: the Poisson representation needs 0 < s < 1/2");
  if (!f.is_schwartz()) throw DomainError("fractional_via_poisson: f must not have a polynomial part");
  auto pz = [&](double z) { return apply_poisson(spec, f, z, x, quad); };
  const double f0 = f.eval(x);
  const double af = f.generator_value(spec, x);
  const double z0 = opt.z_min;
  const double g = (f0 - pz(z0) - 0.5 * z0 * z0 * af) / z0;
  const double e = 2.0 * s;
  double acc = -g * std::pow(z0, 1.0 - e) / (1.0 - e) - af * std::pow(z0, 2.0 - e) / (2.0 * (2.0 - e));
  const Rule1D rule = log_time_rule(z0, opt.z_max, opt.panel_width, opt.panel_order);
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double z = rule.nodes[k];
    acc += rule.weights[k] * std::pow(z, -1.0 - e) * (pz(z) - f0);
  }
  const double zc = opt.z_max;
  const detail::TailModel m = detail::fit_tail(pz, zc, 0.0);
  acc += -f0 * std::pow(zc, -e) / e + detail::tail_integral(m, zc, 0.0, -e);
  return -(e / std::tgamma(1.0 - e)) * acc;
}

namespace detail {

// (−𝒜)^s P_t f(X) by the Balakrishnan integral over P_{t+τ} f(X). The linear
// coefficient at τ = 0 comes from a forward difference at t_min.
inline double fractional_power_of_flow(const OperatorSpec& spec, const TestFunction& f, double s, double t,
                                       const Vec& x, const QuadratureSpec& quad, const FracParams& p) {
  auto g = [&](double tau) { return t + tau > 0.0 ? semigroup_value(spec, f, t + tau, x, quad) : f.eval(x); };
  const double g0 = g(0.0);
  const double g1 = (g(p.t_min) - g0) / p.t_min;
  return -balakrishnan_constant(s) * balakrishnan_integral(g, g0, g1, s, p, t).value;
}

}  // namespace detail

/// ℐ_α((−𝒜)^{α/2} f)(X): the outer potential integral runs over
/// t ↦ (−𝒜)^{α/2} P_t f(X).
inline double potential_of_fractional(const OperatorSpec& spec, const TestFunction& f, double alpha, const Vec& x,
                                      const QuadratureSpec& quad = {}, FracParams params = {}) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("potential_of_fractional: alpha must lie in (0, 2)");
  if (spec.trace_B < 0.0) throw DomainError("potential_of_fractional: trB < 0, the potential integral does not converge");
  params.alpha = alpha;
  params.validate();
  const double beta = 0.5 * alpha;
  auto h = [&](double t) { return detail::fractional_power_of_flow(spec, f, beta, t, x, quad, params); };
  return detail::potential_integral(h, h(0.0), beta, params).value / std::tgamma(beta);
}

/// (−𝒜)^{α/2}(ℐ_α f)(X): the outer Balakrishnan integral runs over
/// τ ↦ ℐ_α(P_τ f)(X).
inline double fractional_of_potential(const OperatorSpec& spec, const TestFunction& f, double alpha, const Vec& x,
                                      const QuadratureSpec& quad = {}, FracParams params = {}) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("fractional_of_potential: alpha must lie in (0, 2)");
  if (spec.trace_B < 0.0) throw DomainError("fractional_of_potential: trB < 0, the potential integral does not converge");
  params.alpha = alpha;
  params.validate();
  const double beta = 0.5 * alpha;
  auto i_alpha = [&](double tau) {
    auto g = [&](double t) { return t + tau > 0.0 ? semigroup_value(spec, f, t + tau, x, quad) : f.eval(x); };
    return detail::potential_integral(g, g(0.0), beta, params, tau).value / std::tgamma(beta);
  };
  const double g0 = i_alpha(0.0);
  const double g1 = (i_alpha(params.t_min) - g0) / params.t_min;
  return -balakrishnan_constant(beta) * detail::balakrishnan_integral(i_alpha, g0, g1, beta, params).value;
}

struct SemigroupPropertyResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_diff = 0.0;
};

/// (−𝒜)^{s+s'} f(X) against (−𝒜)^s((−𝒜)^{s'} f)(X). The outer power acts on
/// t ↦ (−𝒜)^{s'} P_t f(X), using that P_t commutes with the inner power.
inline SemigroupPropertyResult semigroup_property_check(const OperatorSpec& spec, const TestFunction& f, double s,
                                                        double s2, const Vec& x, const QuadratureSpec& quad = {},
                                                        FracParams params = {}) {
  detail::check_order(s, "semigroup_property_check");
  detail::check_order(s2, "semigroup_property_check");
  if (s + s2 > 1.0 + 1e-12) throw DomainError("semigroup_property_check: need s + s' <= 1");
  if (!f.is_schwartz()) throw DomainError("semigroup_property_check: f must not have a polynomial part");
  params.s = s;
  params.validate();
  SemigroupPropertyResult r;
  r.lhs = std::abs(s + s2 - 1.0) <= 1e-12 ? -f.generator_value(spec, x)
                                          : fractional_power(spec, f, s + s2, x, quad, params);
  auto h = [&](double t) { return detail::fractional_power_of_flow(spec, f, s2, t, x, quad, params); };
  const double h0 = h(0.0);
  const double h1 = (h(params.t_min) - h0) / params.t_min;
  r.rhs = -balakrishnan_constant(s) * detail::balakrishnan_integral(h, h0, h1, s, params).value;
  r.abs_diff = std::abs(r.lhs - r.rhs);
  return r;
}

}  // namespace hypok
