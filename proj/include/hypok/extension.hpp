#pragma once

#include "hypok/check.hpp"
#include "hypok/semigroup.hpp"

#include <cmath>
#include <vector>

namespace hypok {

/// log(x^{-ν} I_ν(x)) − x for x ≥ 0 and ν > −1. The x^{-ν} factor keeps the
/// value finite at x = 0, where it equals −ν log 2 − log Γ(ν+1).
inline double log_reduced_bessel_i(double nu, double x) {
  if (!(nu > -1.0)) throw DomainError("bessel: order must exceed -1");
  if (!(x >= 0.0)) throw DomainError("bessel: argument must be nonnegative");
  if (x < 30.0 + nu * nu) {
    // Σ_k (x/2)^{2k} 2^{-ν} / (k! Γ(k+ν+1)), summed relative to its largest term.
    const double lx = x > 0.0 ? 2.0 * std::log(0.5 * x) : -INFINITY;
    std::vector<double> logs;
    double peak = -INFINITY;
    for (int k = 0;; ++k) {
      const double lt = (k > 0 ? k * lx : 0.0) - std::lgamma(k + 1.0) - std::lgamma(k + nu + 1.0);
      logs.push_back(lt);
      peak = std::max(peak, lt);
      if (x == 0.0 || (k > 0.5 * x + 2.0 && lt < peak - 40.0)) break;
    }
    double s = 0.0;
    for (double lt : logs) s += std::exp(lt - peak);
    return peak + std::log(s) - nu * std::log(2.0) - x;
  }
  // Hankel expansion of e^{-x} I_ν(x), truncated at its smallest term.
  const double mu = 4.0 * nu * nu;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double next = -term * (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * x);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return std::log(sum) - 0.5 * std::log(2.0 * kPi * x) - nu * std::log(x);
}

/// e^{-x} I_ν(x).
inline double scaled_bessel_i(double nu, double x) {
  if (x == 0.0) return nu == 0.0 ? 1.0 : (nu > 0.0 ? 0.0 : INFINITY);
  return std::exp(log_reduced_bessel_i(nu, x) + nu * std::log(x));
}

/// I_{ν+1}(x) / I_ν(x).
inline double bessel_i_ratio(double nu, double x) {
  if (x == 0.0) return 0.0;
  return x * std::exp(log_reduced_bessel_i(nu + 1.0, x) - log_reduced_bessel_i(nu, x));
}

namespace detail {

inline void check_bessel_args(double a, double z, double zeta, double t) {
  if (!(a > -1.0)) throw DomainError("bessel kernel: a must exceed -1");
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("bessel kernel: t must be positive");
  if (!(z >= 0.0) || !(zeta >= 0.0)) throw DomainError("bessel kernel: z and zeta must be nonnegative");
}

}  // namespace detail

/// log p^{(a)}(z, ζ, t) for the Bessel operator ∂_z² + (a/z)∂_z with reflecting
/// boundary at z = 0.
inline double log_bessel_kernel(double a, double z, double zeta, double t) {
  detail::check_bessel_args(a, z, zeta, t);
  const double nu = 0.5 * (a - 1.0);
  const double x = z * zeta / (2.0 * t);
  return -0.5 * (a + 1.0) * std::log(2.0 * t) + log_reduced_bessel_i(nu, x) -
         (z - zeta) * (z - zeta) / (4.0 * t);
}

inline double bessel_kernel(double a, double z, double zeta, double t) {
  return std::exp(log_bessel_kernel(a, z, zeta, t));
}

struct BesselLogDerivatives {
  double dz = 0.0;
  double dt = 0.0;
  double ratio = 0.0;  ///< I_{ν+1}/I_ν at zζ/(2t)
};

/// ∂_z and ∂_t of log p^{(a)}(z, ζ, t).
inline BesselLogDerivatives bessel_log_derivatives(double a, double z, double zeta, double t) {
  detail::check_bessel_args(a, z, zeta, t);
  const double x = z * zeta / (2.0 * t);
  BesselLogDerivatives d;
  d.ratio = bessel_i_ratio(0.5 * (a - 1.0), x);
  d.dz = (zeta * d.ratio - z) / (2.0 * t);
  d.dt = -(a + 1.0) / (2.0 * t) - x * d.ratio / t + (z * z + zeta * zeta) / (4.0 * t * t);
  return d;
}

/// A point (X, z) of the upper half space at time t.
struct ExtensionPoint {
  Vec x;
  double z = 0.0;
  double t = 1.0;
};

inline double log_neumann_fundamental_solution(const OperatorSpec& spec, double a, const ExtensionPoint& p,
                                               const ExtensionPoint& q) {
  if (!(p.t > q.t)) throw DomainError("neumann fundamental solution: need t > tau");
  const KernelAtTime k(spec, p.t - q.t);
  return k.log_value(p.x, q.x) + log_bessel_kernel(a, p.z, q.z, p.t - q.t);
}

/// p(X, Y, t−τ) · p^{(a)}(z, ζ, t−τ).
inline double neumann_fundamental_solution(const OperatorSpec& spec, double a, const ExtensionPoint& p,
                                           const ExtensionPoint& q) {
  return std::exp(log_neumann_fundamental_solution(spec, a, p, q));
}

/// Smooth profile in the extension variable: either g ≡ 1 or the bump
/// exp(1 − 1/(1 − u²)), u = (ζ − center)/half_width, supported in (0, ∞).
struct ZProfile {
  bool constant = true;
  double center = 1.0;
  double half_width = 0.5;

  static ZProfile one() { return {}; }
  static ZProfile bump(double center, double half_width) {
    if (!(half_width > 0.0) || !(center - half_width > 0.0))
      throw InputError("ZProfile: bump support must lie in (0, inf)");
    return {false, center, half_width};
  }

  double eval(double zeta) const {
    if (constant) return 1.0;
    const double u = (zeta - center) / half_width;
    if (std::abs(u) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - u * u));
  }
};

/// Separable datum φ(Y, ζ) = f(Y) g(ζ).
struct ExtensionDatum {
  TestFunction f;
  ZProfile g;
};

namespace detail {

// Nodes ζ_i and weights w_i with Σ w_i h(ζ_i) ≈ ∫_lo^hi h(ζ) ζ^a dζ. A panel
// touching 0 uses Gauss–Jacobi so the ζ^a singularity is integrated exactly.
inline Rule1D zeta_rule(double a, double lo, double hi, int panels = 32, int order = 20) {
  Rule1D r;
  if (!(hi > lo)) return r;
  const double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double l = lo + p * h, u = l + h;
    if (l == 0.0) {
      const auto& gj = gauss_jacobi(order, 0.0, a);
      const double scale = std::pow(0.5 * h, a + 1.0);
      for (std::size_t i = 0; i < gj.size(); ++i) {
        r.nodes.push_back(0.5 * h * (1.0 + gj.nodes[i]));
        r.weights.push_back(scale * gj.weights[i]);
      }
    } else {
      const auto& gl = gauss_legendre(order);
      for (std::size_t i = 0; i < gl.size(); ++i) {
        const double zeta = 0.5 * (l + u) + 0.5 * h * gl.nodes[i];
        r.nodes.push_back(zeta);
        r.weights.push_back(0.5 * h * gl.weights[i] * std::pow(zeta, a));
      }
    }
  }
  return r;
}

// Integration range in ζ: the profile's support cut to where p^{(a)}(z, ·, t)
// is not negligible.
inline std::pair<double, double> zeta_range(const ZProfile& g, double z, double t) {
  const double reach = 14.0 * std::sqrt(t) + 2.0 * std::sqrt(t) * std::sqrt(std::max(1.0, z / std::sqrt(t)));
  double lo = std::max(0.0, z - reach), hi = z + reach;
  if (!g.constant) {
    lo = std::max(lo, g.center - g.half_width);
    hi = std::min(hi, g.center + g.half_width);
  }
  return {lo, hi};
}

struct BesselFlow {
  double value = 0.0;
  double dz = 0.0;
};

// ∫ p^{(a)}(z, ζ, t) g(ζ) ζ^a dζ and its z-derivative.
inline BesselFlow bessel_flow(double a, const ZProfile& g, double z, double t) {
  const auto [lo, hi] = zeta_range(g, z, t);
  const Rule1D r = zeta_rule(a, lo, hi);
  BesselFlow out;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double zeta = r.nodes[i];
    const double gv = g.eval(zeta);
    if (gv == 0.0) continue;
    const double p = bessel_kernel(a, z, zeta, t);
    out.value += r.weights[i] * p * gv;
    out.dz += r.weights[i] * p * gv * bessel_log_derivatives(a, z, zeta, t).dz;
  }
  return out;
}

inline void require_nonnegative(const TestFunction& f) {
  const int n = f.dim();
  const auto [lo, hi] = f.support_box(1e-8);
  const int m = n == 1 ? 401 : (n == 2 ? 41 : 11);
  Vec y(n);
  std::vector<int> idx(n, 0);
  while (true) {
    for (int i = 0; i < n; ++i) y(i) = lo(i) + (hi(i) - lo(i)) * idx[i] / (m - 1);
    if (f.eval(y) < 0.0) throw PreconditionError("harnack_check: datum is negative at a sampled point");
    int d = 0;
    while (d < n && ++idx[d] == m) idx[d++] = 0;
    if (d == n) break;
  }
}

}  // namespace detail

/// ∫₀^∞ p^{(a)}(z, ζ, t) g(ζ) ζ^a dζ.
inline double bessel_semigroup(double a, const ZProfile& g, double z, double t) {
  detail::check_bessel_args(a, z, 0.0, t);
  return detail::bessel_flow(a, g, z, t).value;
}

/// 𝒫^{(a)}_t φ(X, z) for separable φ = f ⊗ g.
inline double extension_semigroup(const OperatorSpec& spec, double a, const ExtensionDatum& phi, double t,
                                  const Vec& x, double z, const QuadratureSpec& quad = {}) {
  if (!(t > 0.0)) throw DomainError("extension_semigroup: t must be positive");
  return semigroup_value(spec, phi.f, t, x, quad) * bessel_semigroup(a, phi.g, z, t);
}

/// Li–Yau inequality for u = log 𝒢^{(a)}(·, ·, ·; Y, τ, ζ) at (X, t, z). The
/// Bessel part falls short of its bound by exactly ζ²(1 − r²)/(4(t−τ)²) with
/// r = I_{ν+1}/I_ν, so strictness is decided from that closed form.
inline InequalityCheck liyau_extension_check(const OperatorSpec& spec, double a, const ExtensionPoint& p,
                                             const ExtensionPoint& source) {
  if (p.z > 0.0 && a < 0.0) throw DomainError("liyau_extension_check: z > 0 requires a >= 0");
  if (!(p.t > source.t)) throw DomainError("liyau_extension_check: need t > tau");
  const double s = p.t - source.t;
  const auto xs = liyau_kernel_identity(spec, p.x, source.x, p.t, source.t);
  const auto bd = bessel_log_derivatives(a, p.z, source.z, s);
  const double lhs = xs.lhs + bd.dz * bd.dz - bd.dt;
  const double rhs = xs.rhs + (a + 1.0) / (2.0 * s);
  const double gap = source.z * source.z * (1.0 - bd.ratio) * (1.0 + bd.ratio) / (4.0 * s * s);
  auto c = make_check("liyau_extension", lhs, rhs, 0.0, {{"a", a}, {"t", s}, {"bessel_gap", gap}});
  c.pass = c.pass && gap > 0.0;
  return c;
}

/// Li–Yau inequality for u = log 𝒫^{(a)}_t φ with φ = f ⊗ g ≥ 0. Spatial and
/// z-derivatives are taken under the integral; ∂_t by central differences.
inline InequalityCheck liyau_extension_semigroup_check(const OperatorSpec& spec, double a, const ExtensionDatum& phi,
                                                       const Vec& x, double z, double t,
                                                       const QuadratureSpec& quad = {}) {
  if (z > 0.0 && a < 0.0) throw DomainError("liyau_extension_semigroup_check: z > 0 requires a >= 0");
  if (!(t > 0.0)) throw DomainError("liyau_extension_semigroup_check: t must be positive");
  const int n = spec.dim;
  auto spatial = [&](double tt) { return semigroup_value(spec, phi.f, tt, x, quad); };
  const double pf = spatial(t);
  Vec grad;
  if (phi.f.max_degree() <= 2) {
    grad = PropagatedFunction(spec, phi.f, t).gradient(x);
  } else {
    const KernelAtTime k(spec, t);
    grad = k.gramians().exp_tB.transpose() *
           gh_expectation_vec(k, x, gh_order_for(k, phi.f, quad.gh_order), n,
                              [&](const Vec& y) { return phi.f.gradient(y); });
  }
  if (!(pf > 0.0)) throw PreconditionError("liyau_extension_semigroup_check: P_t f(X) must be positive");
  const double h = 1e-4 * t;
  const Vec gl = grad / pf;
  const double dt_x = (std::log(spatial(t + h)) - std::log(spatial(t - h))) / (2.0 * h);
  const double x_part = gl.dot(spec.Q * gl) + (spec.B * x).dot(gl) - dt_x;

  const auto bf = detail::bessel_flow(a, phi.g, z, t);
  if (!(bf.value > 0.0)) throw PreconditionError("liyau_extension_semigroup_check: Bessel flow vanishes at z");
  const double dz = bf.dz / bf.value;
  const double dt_z = (std::log(bessel_semigroup(a, phi.g, z, t + h)) -
                       std::log(bessel_semigroup(a, phi.g, z, t - h))) / (2.0 * h);
  const double lhs = x_part + dz * dz - dt_z;
  const double rhs = 0.5 * (spec.Q * gramians(spec, t).inv_C_t).trace() + (a + 1.0) / (2.0 * t);
  return make_check("liyau_extension_semigroup", lhs, rhs, 0.0, {{"a", a}, {"t", t}, {"z", z}});
}

struct OptimalCurve {
  std::vector<double> tau;
  std::vector<Vec> gamma;
  std::vector<Vec> omega;
  std::vector<double> z_path;
  double cost = 0.0;              ///< ∫|ω|² by Gauss–Legendre
  double cost_closed_form = 0.0;  ///< ⟨C⁻¹(t−s) d, d⟩, d = X − e^{−(t−s)B} Y
};

namespace detail {

struct ControlData {
  Mat sqrt_Q;
  Vec w;  // C⁻¹(t−s)(X − e^{−(t−s)B}Y)
  double cost_closed_form = 0.0;
};

inline ControlData control_data(const OperatorSpec& spec, const Vec& x, const Vec& y, double horizon) {
  const auto g = gramians(spec, horizon, true);
  const Vec d = x - g.exp_minus_tB * y;
  ControlData c;
  c.sqrt_Q = sym_sqrt(spec.Q);
  c.w = g.inv_C_t * d;
  c.cost_closed_form = d.dot(c.w);
  return c;
}

}  // namespace detail

/// e^{τB}(X − C(τ) w).
inline Vec optimal_curve_point(const OperatorSpec& spec, const Vec& x, const Vec& w, double tau) {
  if (tau == 0.0) return x;
  const auto g = gramians(spec, tau);
  return g.exp_tB * (x - g.C_t * w);
}

/// γ(τ) = e^{τB}(X − C(τ) C⁻¹(t−s)(X − e^{−(t−s)B}Y)) with control
/// ω(τ) = −Q^{1/2} e^{−τBᵀ} C⁻¹(t−s)(X − e^{−(t−s)B}Y) on n_tau equispaced nodes.
inline OptimalCurve optimal_curve(const OperatorSpec& spec, const Vec& x, const Vec& y, double t, double s,
                                  double z, double zeta, int n_tau) {
  if (!(s > 0.0) || !(s < t)) throw DomainError("optimal_curve: need 0 < s < t");
  if (n_tau < 2) throw InputError("optimal_curve: need at least 2 nodes");
  const double horizon = t - s;
  const auto cd = detail::control_data(spec, x, y, horizon);
  auto control = [&](double tau) -> Vec {
    return -(cd.sqrt_Q * (matrix_exponential(-spec.B.transpose(), tau) * cd.w));
  };
  OptimalCurve out;
  out.cost_closed_form = cd.cost_closed_form;
  for (int i = 0; i < n_tau; ++i) {
    const double tau = horizon * i / (n_tau - 1);
    out.tau.push_back(tau);
    out.gamma.push_back(optimal_curve_point(spec, x, cd.w, tau));
    out.omega.push_back(control(tau));
    out.z_path.push_back(z - tau / horizon * (z - zeta));
  }
  const Rule1D r = composite_legendre(0.0, horizon, 4, 16);
  for (std::size_t i = 0; i < r.size(); ++i) out.cost += r.weights[i] * control(r.nodes[i]).squaredNorm();
  return out;
}

/// log M for the multiplier M with 𝒫_s φ(Y, ζ) ≤ M · 𝒫_t φ(X, z).
inline double log_harnack_bound_factor(const OperatorSpec& spec, double a, const Vec& x, double z, double t,
                                   const Vec& y, double zeta, double s) {
  if (!(s > 0.0) || !(s < t)) throw DomainError("harnack: need 0 < s < t");
  const int n = spec.dim;
  const double det_t = gramians(spec, t, true, false).K_t.determinant();
  const double det_s = gramians(spec, s, true, false).K_t.determinant();
  const double cost = detail::control_data(spec, x, y, t - s).cost_closed_form;
  return 0.5 * (n + a + 1.0) * std::log(t / s) + 0.5 * std::log(det_t / det_s) +
         (z - zeta) * (z - zeta) / (4.0 * (t - s)) + 0.25 * cost;
}

inline double harnack_bound_factor(const OperatorSpec& spec, double a, const Vec& x, double z, double t,
                                   const Vec& y, double zeta, double s) {
  return std::exp(log_harnack_bound_factor(spec, a, x, z, t, y, zeta, s));
}

/// 𝒫_s φ(Y, ζ) ≤ 𝒫_t φ(X, z) · (t/s)^{(N+a+1)/2} (det K(t)/det K(s))^{1/2}
///   · exp(|z−ζ|²/(4(t−s))) · exp(¼⟨C⁻¹(t−s)(X − e^{−(t−s)B}Y), X − e^{−(t−s)B}Y⟩).
inline InequalityCheck harnack_check(const OperatorSpec& spec, double a, const ExtensionDatum& phi,
                                     const ExtensionPoint& early, const ExtensionPoint& late,
                                     const QuadratureSpec& quad = {}) {
  const bool boundary = early.z == 0.0 && late.z == 0.0;
  if (!boundary && a < 0.0) throw DomainError("harnack_check: a < 0 is only allowed when z = zeta = 0");
  if (!(early.t > 0.0) || !(early.t < late.t)) throw DomainError("harnack_check: need 0 < s < t");
  detail::require_nonnegative(phi.f);
  const double lhs = extension_semigroup(spec, a, phi, early.t, early.x, early.z, quad);
  const double log_factor = log_harnack_bound_factor(spec, a, late.x, late.z, late.t, early.x, early.z, early.t);
  const double base = extension_semigroup(spec, a, phi, late.t, late.x, late.z, quad);
  auto c = make_check("harnack", lhs, base * std::exp(log_factor), 0.0,
                      {{"a", a}, {"s", early.t}, {"t", late.t}, {"log_factor", log_factor}});
  // The multiplier overflows for short time gaps with a large control cost.
  c.tol = 1e-9 * c.rhs;
  c.pass = lhs <= 0.0 || (base > 0.0 && std::log(lhs) <= std::log(base) + log_factor + std::log1p(1e-9));
  return c;
}

struct SharpnessRow {
  double eps = 0.0;
  double ratio = 0.0;              ///< u(0,s,ζ)/u(0,t,z) from the kernel
  double ratio_closed_form = 0.0;  ///< the power expression in ε
  double bound = 0.0;
  double R = 0.0;                  ///< ratio / bound
};

/// Ratio of the Harnack quotient of u = 𝒢^{(a)}(·, ·, ·; 0, −ε, 0) to the
/// Harnack multiplier at X = Y = 0, z = ζ = z_probe. Tends to 1 as ε, z → 0.
inline std::vector<SharpnessRow> harnack_sharpness_probe(const OperatorSpec& spec, double a,
                                                         const std::vector<double>& eps_sequence, double s = 1.0,
                                                         double t = 2.0, double z_probe = 1e-3) {
  if (!(a > -1.0)) throw DomainError("harnack_sharpness_probe: a must exceed -1");
  const int n = spec.dim;
  const Vec origin = Vec::Zero(n);
  const double bound = harnack_bound_factor(spec, a, origin, z_probe, t, origin, z_probe, s);
  std::vector<SharpnessRow> rows;
  for (double eps : eps_sequence) {
    if (!(eps > 0.0)) throw DomainError("harnack_sharpness_probe: eps must be positive");
    const ExtensionPoint src{origin, 0.0, -eps};
    const double num = log_neumann_fundamental_solution(spec, a, {origin, z_probe, s}, src);
    const double den = log_neumann_fundamental_solution(spec, a, {origin, z_probe, t}, src);
    SharpnessRow r;
    r.eps = eps;
    r.ratio = std::exp(num - den);
    const double dk = gramians(spec, t + eps, true, false).K_t.determinant() /
                      gramians(spec, s + eps, true, false).K_t.determinant();
    r.ratio_closed_form = std::exp(0.5 * (n + a + 1.0) * std::log((t + eps) / (s + eps)) +
                                   z_probe * z_probe / (4.0 * (t + eps)) - z_probe * z_probe / (4.0 * (s + eps)) +
                                   0.5 * std::log(dk));
    r.bound = bound;
    r.R = r.ratio / bound;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace hypok
