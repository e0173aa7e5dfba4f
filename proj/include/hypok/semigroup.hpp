#pragma once

#include "hypok/kernel.hpp"
#include "hypok/quadrature.hpp"
#include "hypok/rng.hpp"
#include "hypok/testfuncs.hpp"

#include <limits>

namespace hypok {

struct QuadratureSpec {
  int gh_order = 40;
  int time_nodes = 200;
  std::uint64_t mc_samples = 1u << 16;
  std::uint64_t rng_seed = 20240607;

  void validate() const {
    if (gh_order < 8) throw InputError("QuadratureSpec: gh_order must be >= 8");
    if (mc_samples < 1024) throw InputError("QuadratureSpec: mc_samples must be >= 1024");
    if (time_nodes < 16) throw InputError("QuadratureSpec: time_nodes must be >= 16");
  }
};

/// A Monte Carlo or quadrature value with its standard error (zero for
/// deterministic rules).
struct ValueWithError {
  double value = 0.0;
  double stderr_ = 0.0;
};

/// P_t f for a test function with monomials of degree ≤ 2, evaluated directly
/// from the Gaussian convolution at the drifted mean e^{tB}X. Remains finite for
/// large t where the re-centred form returned by `propagate` degenerates.
class PropagatedFunction {
 public:
  PropagatedFunction(const OperatorSpec& spec, const TestFunction& f, double t)
      : PropagatedFunction(spec, f, gramians(spec, t, false, false)) {}

  PropagatedFunction(const OperatorSpec& spec, const TestFunction& f, const GramianBundle& g)
      : exp_tB_(g.exp_tB) {
    const int n = spec.dim;
    if (f.dim() != n) throw InputError("PropagatedFunction: dimension mismatch");
    const Mat s = 2.0 * g.t * g.K_t;
    for (const auto& term : f.terms()) {
      if (term.degree() > 2) throw UnsupportedError("exact semigroup: monomial degree above 2");
      Term pt;
      const Mat gcov = (2.0 * term.shape).inverse();
      const Mat sg = s + gcov;
      pt.w = symmetrize(sg.llt().solve(Mat::Identity(n, n)));
      pt.amp = term.coeff * std::sqrt(gcov.determinant() / sg.determinant());
      pt.center = term.center;
      pt.gw = gcov * pt.w;
      pt.pi = symmetrize(s * pt.w * gcov);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < term.monomial[i]; ++k) pt.idx.push_back(i);
      terms_.push_back(std::move(pt));
    }
    const auto& p = f.polynomial();
    constant_ = p.constant + (p.quadratic * s).trace();
    linear_ = p.linear;
    quadratic_ = p.quadratic;
  }

  double eval(const Vec& x) const {
    const Vec m = exp_tB_ * x;
    double v = constant_ + linear_.dot(m) + m.dot(quadratic_ * m);
    for (const auto& pt : terms_) {
      const Vec d = m - pt.center;
      const double z = pt.amp * std::exp(-0.5 * d.dot(pt.w * d));
      if (pt.idx.empty()) {
        v += z;
      } else if (pt.idx.size() == 1) {
        v += z * pt.gw.row(pt.idx[0]).dot(d);
      } else {
        const int i = pt.idx[0], j = pt.idx[1];
        v += z * (pt.gw.row(i).dot(d) * pt.gw.row(j).dot(d) + pt.pi(i, j));
      }
    }
    return v;
  }

  /// Gradient in X.
  Vec gradient(const Vec& x) const {
    const Vec m = exp_tB_ * x;
    Vec gm = linear_ + 2.0 * quadratic_ * m;
    for (const auto& pt : terms_) {
      const Vec d = m - pt.center;
      const double z = pt.amp * std::exp(-0.5 * d.dot(pt.w * d));
      const Vec wd = pt.w * d;
      if (pt.idx.empty()) {
        gm -= z * wd;
      } else if (pt.idx.size() == 1) {
        const double di = pt.gw.row(pt.idx[0]).dot(d);
        gm += z * (pt.gw.row(pt.idx[0]).transpose() - di * wd);
      } else {
        const int i = pt.idx[0], j = pt.idx[1];
        const double di = pt.gw.row(i).dot(d), dj = pt.gw.row(j).dot(d);
        gm += z * (dj * pt.gw.row(i).transpose() + di * pt.gw.row(j).transpose() - (di * dj + pt.pi(i, j)) * wd);
      }
    }
    return exp_tB_.transpose() * gm;
  }

 private:
  struct Term {
    double amp = 0.0;
    Vec center;
    Mat w;
    Mat gw;
    Mat pi;
    std::vector<int> idx;
  };
  Mat exp_tB_;
  std::vector<Term> terms_;
  double constant_ = 0.0;
  Vec linear_;
  Mat quadratic_;
};

/// Expectation of fn(Y) under p(X, ·, t) by tensor Gauss–Hermite after whitening.
template <class Fn>
double gh_expectation(const KernelAtTime& k, const Vec& x, int order, Fn&& fn) {
  const int n = k.spec().dim;
  if (n > 4) throw UnsupportedError("tensor Gauss–Hermite quadrature is limited to N <= 4");
  const Vec mean = k.gramians().exp_tB * x;
  const Mat l = std::sqrt(4.0 * k.t()) * k.sqrt_K();
  double acc = 0.0;
  for_each_hermite_node(n, order, [&](const Vec& u, double w) { acc += w * fn(static_cast<Vec>(mean + l * u)); });
  return acc;
}

/// Vector-valued variant of gh_expectation.
template <class Fn>
Vec gh_expectation_vec(const KernelAtTime& k, const Vec& x, int order, int out_dim, Fn&& fn) {
  const int n = k.spec().dim;
  if (n > 4) throw UnsupportedError("tensor Gauss–Hermite quadrature is limited to N <= 4");
  const Vec mean = k.gramians().exp_tB * x;
  const Mat l = std::sqrt(4.0 * k.t()) * k.sqrt_K();
  Vec acc = Vec::Zero(out_dim);
  for_each_hermite_node(n, order, [&](const Vec& u, double w) { acc += w * fn(static_cast<Vec>(mean + l * u)); });
  return acc;
}

/// Per-axis Gauss–Hermite order for integrating g against p(X, ·, t), where g
/// is f (power 1) or a product of two factors built from f such as f² or
/// |∇f|² (power 2). In whitened coordinates a Gaussian term of f behaves like
/// exp(−a|u|²) with a = power · 4t · λ_max(K^{1/2} S K^{1/2}); the rule error
/// then decays like (a/(1+a))^{2n}. The order is never below `base` and is
/// capped so that the tensor grid stays affordable (N = 4 keeps `base`).
inline int gh_order_for(const KernelAtTime& k, const TestFunction& f, int base, double power = 1.0) {
  double a = 0.0;
  for (const auto& term : f.terms())
    a = std::max(a, max_eigenvalue(symmetrize(k.sqrt_K() * term.shape * k.sqrt_K())));
  a *= power * 4.0 * k.t();
  if (!(a > 0.0)) return base;
  const double need = std::ceil(std::log(1e-13) / (2.0 * std::log(a / (1.0 + a))));
  static constexpr int kCap[] = {0, 400, 300, 100, 40};
  const int cap = kCap[std::clamp(k.spec().dim, 1, 4)];
  return std::max(base, static_cast<int>(std::min<double>(need, cap)));
}

/// Monte Carlo expectation of fn(Y) under p(X, ·, t) with a counter-based stream.
template <class Fn>
ValueWithError mc_expectation(const KernelAtTime& k, const Vec& x, std::uint64_t samples, const CounterRng& rng,
                              Fn&& fn) {
  const int n = k.spec().dim;
  const Vec mean = k.gramians().exp_tB * x;
  const Mat l = std::sqrt(4.0 * k.t()) * k.sqrt_K();
  double sum = 0.0, sum2 = 0.0;
  Vec u(n);
  for (std::uint64_t i = 0; i < samples; ++i) {
    for (int d = 0; d < n; ++d) u(d) = normal_quantile(rng.uniform(i * n + d)) / std::sqrt(2.0);
    const double v = fn(static_cast<Vec>(mean + l * u));
    sum += v;
    sum2 += v * v;
  }
  ValueWithError r;
  const double ns = static_cast<double>(samples);
  r.value = sum / ns;
  r.stderr_ = std::sqrt(std::max(0.0, sum2 / ns - r.value * r.value) / ns);
  return r;
}

/// P_t f(X) by whitened tensor Gauss–Hermite of adaptive order.
inline double apply_semigroup(const OperatorSpec& spec, const TestFunction& f, double t, const Vec& x,
                              const QuadratureSpec& quad = {}) {
  if (!(t > 0.0)) throw DomainError("apply_semigroup: t must be positive");
  const KernelAtTime k(spec, t);
  return gh_expectation(k, x, gh_order_for(k, f, quad.gh_order), [&](const Vec& y) { return f.eval(y); });
}

/// P_t of a compactly supported function by Monte Carlo.
template <class Compact>
  requires requires(const Compact& c, const Vec& y) { c.gradient(y); c.eval(y); }
ValueWithError apply_semigroup(const OperatorSpec& spec, const Compact& f, double t, const Vec& x,
                               const QuadratureSpec& quad = {}, std::uint64_t stream = 0) {
  if (!(t > 0.0)) throw DomainError("apply_semigroup: t must be positive");
  const KernelAtTime k(spec, t);
  return mc_expectation(k, x, quad.mc_samples, CounterRng(quad.rng_seed, stream),
                        [&](const Vec& y) { return f.eval(y); });
}

/// Returns P_t f(X), exactly when the family allows it and by Gauss–Hermite
/// otherwise.
inline double semigroup_value(const OperatorSpec& spec, const TestFunction& f, double t, const Vec& x,
                              const QuadratureSpec& quad = {}) {
  if (f.max_degree() <= 2) return PropagatedFunction(spec, f, t).eval(x);
  return apply_semigroup(spec, f, t, x, quad);
}

namespace detail {

// x-grid for the subordination integral, see apply_poisson.
inline constexpr double kPoissonStep = 0.1;
inline constexpr double kPoissonUpper = 2.5;
inline constexpr double kPoissonMaxTime = 1e12;

}  // namespace detail

/// Poisson semigroup 𝒫_z f(X) = (4π)^{-1/2} ∫_0^∞ z t^{-3/2} e^{-z²/4t} P_t f(X) dt.
///
/// With t = z²/(4w) and w = e^{2x} the integral becomes
/// (2/√π) ∫ exp(-e^{2x}) e^{x} P_{t(x)} f(X) dx, which decays doubly
/// exponentially as x → ∞ and like e^{x} as x → -∞; the trapezoid rule in x
/// converges geometrically. Below the node where t exceeds 1e12 the integrand
/// is frozen at its value there.
template <class PtAt>
double poisson_subordination(double z, PtAt&& pt_at) {
  if (!(z > 0.0)) throw DomainError("apply_poisson: z must be positive");
  const double h = detail::kPoissonStep;
  const int k_max = static_cast<int>(std::ceil(detail::kPoissonUpper / h));
  double frozen = std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  int k = k_max;
  // Nodes down to x = -20, where exp(-e^{2x}) rounds to 1; the rest is a
  // geometric series in e^{x} with the frozen value.
  for (; k * h > -20.0; --k) {
    const double x = k * h;
    const double w = std::exp(2.0 * x);
    const double t = z * z / (4.0 * w);
    double v;
    if (t < detail::kPoissonMaxTime) {
      v = pt_at(t);
    } else {
      if (std::isnan(frozen)) frozen = pt_at(detail::kPoissonMaxTime);
      v = frozen;
    }
    acc += h * std::exp(-w) * std::exp(x) * v;
  }
  if (std::isnan(frozen)) frozen = pt_at(detail::kPoissonMaxTime);
  acc += frozen * h * std::exp(k * h) / (1.0 - std::exp(-h));
  return 2.0 / std::sqrt(kPi) * acc;
}

inline double apply_poisson(const OperatorSpec& spec, const TestFunction& f, double z, const Vec& x,
                            const QuadratureSpec& quad = {}) {
  return poisson_subordination(z, [&](double t) { return semigroup_value(spec, f, t, x, quad); });
}

/// Constant c_{N,r} with ‖p(·, Y, t)‖_r = c_{N,r} V(t)^{-(1-1/r)} e^{-t trB / r},
/// obtained once from the heat operator at t = 1.
double lr_norm_constant(int n, double r, const QuadratureSpec& quad = {});

/// (∫ p(X, Y, t)^r dX)^{1/r} by Gauss–Hermite in X around the backward mean
/// e^{-tB}Y (p is Gaussian in X with covariance 2C(t)).
inline double kernel_lr_norm(const OperatorSpec& spec, const Vec& y, double t, double r,
                             const QuadratureSpec& quad = {}) {
  if (!(r >= 1.0)) throw DomainError("kernel_lr_norm: r must be >= 1");
  if (!(t > 0.0)) throw DomainError("kernel_lr_norm: t must be positive");
  const KernelAtTime k(spec, t);
  const int n = spec.dim;
  if (n > 4) throw UnsupportedError("kernel_lr_norm: N <= 4 required");
  const auto& g = k.gramians();
  const Vec c = g.exp_minus_tB * y;
  const Mat l = 2.0 * sym_sqrt(g.C_t);
  const double jac = l.determinant() * std::pow(kPi, 0.5 * n);
  // The Gauss–Hermite weights are normalised to the Gaussian measure, so the
  // weight e^{-|u|²} is divided back out of p^r.
  double acc = 0.0;
  for_each_hermite_node(n, quad.gh_order, [&](const Vec& u, double w) {
    const Vec xx = c + l * u;
    acc += w * std::exp(r * k.log_value(xx, y) + u.squaredNorm());
  });
  return std::pow(jac * acc, 1.0 / r);
}

inline double lr_norm_constant(int n, double r, const QuadratureSpec& quad) {
  if (std::isinf(r)) return KernelConstants(n).c_N;
  const OperatorSpec heat = OperatorSpec::heat(n);
  return kernel_lr_norm(heat, Vec::Zero(n), 1.0, r, quad) * std::pow(volume(heat, 1.0), 1.0 - 1.0 / r);
}

/// Constant of the L^p → L^q bound ‖P_t‖ ≤ C V(t)^{-(1/p-1/q)} e^{-t trB/q}
/// obtained by interpolating the L^1 → L^r and L^{r'} → L^∞ kernel-norm bounds,
/// 1/r = 1 + 1/q - 1/p. Both endpoint bounds share the constant c_{N,r}.
inline double ultracontractivity_constant(int n, double p, double q, const QuadratureSpec& quad = {}) {
  if (!(p >= 1.0) || !(q >= p)) throw DomainError("ultracontractivity_constant: need 1 <= p <= q");
  const double inv_r = 1.0 + (std::isinf(q) ? 0.0 : 1.0 / q) - 1.0 / p;
  if (inv_r >= 1.0 - 1e-15) return 1.0;
  const double r = inv_r <= 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / inv_r;
  return lr_norm_constant(n, r, quad);
}

/// L^q norm (q may be +inf) of a function over a box by tensor Gauss–Legendre.
/// For q = inf the maximum over the nodes and the extra candidate points is used.
template <class Fn>
double lq_norm_on_box(const Vec& lo, const Vec& hi, double q, Fn&& fn, int panels = 16, int order = 16,
                      const std::vector<Vec>& candidates = {}) {
  const int n = static_cast<int>(lo.size());
  std::vector<Rule1D> axes;
  for (int d = 0; d < n; ++d) axes.push_back(composite_legendre(lo(d), hi(d), panels, order));
  if (std::isinf(q)) {
    double m = 0.0;
    for_each_tensor_node(axes, [&](const Vec& x, double) { m = std::max(m, std::abs(fn(x))); });
    for (const auto& c : candidates) m = std::max(m, std::abs(fn(c)));
    return m;
  }
  double acc = 0.0;
  for_each_tensor_node(axes, [&](const Vec& x, double w) { acc += w * std::pow(std::abs(fn(x)), q); });
  return std::pow(acc, 1.0 / q);
}

/// Per-axis panel count keeping tensor grids affordable.
inline int default_panels(int dim) { return dim <= 2 ? 16 : (dim == 3 ? 5 : 2); }

inline double lq_norm(const TestFunction& f, double q) {
  if (!f.is_schwartz()) throw DomainError("lq_norm: function has a polynomial part");
  if (f.terms().empty()) return 0.0;
  const auto [lo, hi] = f.support_box();
  std::vector<Vec> cands;
  for (const auto& t : f.terms()) cands.push_back(t.center);
  return lq_norm_on_box(lo, hi, q, [&](const Vec& y) { return f.eval(y); }, default_panels(f.dim()), 16, cands);
}

struct UltracontractivityResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double constant = 0.0;
  double truncation_bound = 0.0;
  bool trace_B_negative = false;
  bool pass = false;
};

/// ‖P_t f‖_q against C V(t)^{-(1/p-1/q)} e^{-t trB/q} ‖f‖_p.
inline UltracontractivityResult ultracontractivity_check(const OperatorSpec& spec, const TestFunction& f, double p,
                                                         double q, double t, const QuadratureSpec& quad = {}) {
  if (!(p >= 1.0) || !(q >= p)) throw DomainError("ultracontractivity_check: need 1 <= p <= q");
  UltracontractivityResult r;
  r.trace_B_negative = spec.trace_B < 0.0;
  r.constant = ultracontractivity_constant(spec.dim, p, q, quad);
  const TestFunction ptf = propagate(spec, f, t);
  r.lhs = lq_norm(ptf, q);
  const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
  r.rhs = r.constant * std::pow(volume(spec, t), -(1.0 / p - inv_q)) * std::exp(-t * spec.trace_B * inv_q) *
          lq_norm(f, p);
  r.truncation_bound = 1e-16 * (r.lhs + r.rhs);
  r.pass = r.lhs <= r.rhs * (1.0 + 1e-9) + 1e-300;
  return r;
}

}  // namespace hypok
