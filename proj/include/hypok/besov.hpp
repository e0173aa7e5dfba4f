#pragma once

#include "hypok/fractional.hpp"

#include <array>
#include <functional>

namespace hypok {

/// Axis-aligned box {lo < X < hi}.
struct BoxSet {
  Vec lo;
  Vec hi;

  BoxSet(Vec l, Vec h) : lo(std::move(l)), hi(std::move(h)) {
    if (lo.size() != hi.size() || lo.size() == 0) throw InputError("BoxSet: lo and hi must have the same positive size");
    if (!lo.allFinite() || !hi.allFinite()) throw InputError("BoxSet: non-finite bounds");
    if (((hi - lo).array() <= 0.0).any()) throw DomainError("BoxSet: need lo < hi componentwise");
  }

  static BoxSet interval(double a, double b) { return BoxSet(Vec::Constant(1, a), Vec::Constant(1, b)); }

  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const { return (hi - lo).prod(); }
  bool contains(const Vec& x) const { return (x.array() > lo.array()).all() && (x.array() < hi.array()).all(); }
};

struct SeminormPieces {
  double near = 0.0;        ///< ∫_0^{t_split} contribution to 𝒩^p
  double far = 0.0;         ///< ∫_{t_split}^∞ contribution to 𝒩^p
  double lower = 0.0;       ///< analytic piece below the first time node (inside `near`)
  double tail = 0.0;        ///< extrapolated piece beyond the cap (inside `far`)
  double tail_bound = 0.0;  ///< a priori bound on the piece beyond the cap
};

struct SeminormResult {
  double value = 0.0;
  double stderr_ = 0.0;
  SeminormPieces pieces;
};

struct BesovOptions {
  double t_min = 1e-8;
  double t_split = 1.0;
  double tail_cap = 1e6;
  double panel_width = 1.5;
  int panel_order = 8;
  int y_panels = 0;  ///< 0 picks a per-dimension default
  int y_order = 16;
  int gh_order = 24;
};

/// Factor κ with 𝒩_{p,α}(f)^p = κ ∫∫ |f(X) − f(Y)|^p |X − Y|^{−N−αp} dX dY for
/// the heat operator: κ = 2^{αp} Γ((N+αp)/2) / π^{N/2}.
inline double heat_besov_factor(int n, double p, double alpha) {
  const double q = alpha * p;
  return std::pow(2.0, q) * std::tgamma(0.5 * (n + q)) / std::pow(kPi, 0.5 * n);
}

/// Constant in 𝒩 ≤ C (𝒩̃ + ‖f‖_p) obtained from the bound on t ≥ 1.
inline double besov_truncation_constant(double p, double alpha) {
  return std::max(1.0, 2.0 * std::pow(2.0 / (alpha * p), 1.0 / p));
}

namespace detail {

// Geometrically graded rule on [a, b] whose two end panels carry the weight
// (distance to the endpoint)^{-q} through Gauss–Jacobi, so integrands
// behaving like that power near the ends are integrated without loss.
inline Rule1D edge_singular_rule(double a, double b, int levels, int order, double q) {
  const double w = 0.5 * (b - a) * std::ldexp(1.0, -levels);
  std::vector<double> breaks;
  for (int l = 1; l < levels; ++l) {
    breaks.push_back(a + 0.5 * (b - a) * std::ldexp(1.0, -l));
    breaks.push_back(b - 0.5 * (b - a) * std::ldexp(1.0, -l));
  }
  Rule1D r = composite_legendre(a + w, b - w, 2, order, breaks);
  const Rule1D& gj = gauss_jacobi(order, 0.0, -q);
  for (std::size_t k = 0; k < gj.size(); ++k) {
    const double u = 1.0 + gj.nodes[k];
    const double wk = 0.5 * w * gj.weights[k] * std::pow(u, q);
    r.nodes.push_back(a + 0.5 * w * u);
    r.weights.push_back(wk);
    r.nodes.push_back(b - 0.5 * w * u);
    r.weights.push_back(wk);
  }
  return r;
}

inline std::vector<Rule1D> box_axes(const Vec& lo, const Vec& hi, int panels, int order) {
  std::vector<Rule1D> axes;
  for (int d = 0; d < lo.size(); ++d) axes.push_back(composite_legendre(lo(d), hi(d), panels, order));
  return axes;
}

// ∫_0^∞ t^{-e-1} J(t) dt, e = αp/2, split at t_split.
template <class J>
SeminormPieces besov_time_integral(J&& jfun, double e, const BesovOptions& o, double tail_bound_scale) {
  SeminormPieces pc;
  const double tm = o.t_min;
  const double j0 = jfun(tm), j1 = jfun(tm * std::numbers::e);
  if (j0 > 0.0 && j1 > 0.0) {
    const double gamma = std::log(j1 / j0);
    if (gamma <= e) throw DomainError("besov_seminorm: the time integral diverges at t = 0");
    pc.lower = j0 * std::pow(tm, -e) / (gamma - e);
  }
  pc.near = pc.lower;
  const Rule1D lo = log_time_rule(tm, o.t_split, o.panel_width, o.panel_order);
  for (std::size_t k = 0; k < lo.size(); ++k) pc.near += lo.weights[k] * std::pow(lo.nodes[k], -e - 1.0) * jfun(lo.nodes[k]);
  const Rule1D hi = log_time_rule(o.t_split, o.tail_cap, o.panel_width, o.panel_order);
  for (std::size_t k = 0; k < hi.size(); ++k) pc.far += hi.weights[k] * std::pow(hi.nodes[k], -e - 1.0) * jfun(hi.nodes[k]);
  const double cap = o.tail_cap;
  const TailModel m = fit_tail(jfun, cap, 0.0);
  const double prev = jfun(cap / std::numbers::e);
  if (!std::isfinite(m.g_cap) || m.g_cap * std::pow(cap, -e) > prev * std::pow(cap / std::numbers::e, -e) * (1.0 + 1e-12))
    throw DomainError("besov_seminorm: the time integral diverges as t grows (check trB >= 0)");
  pc.tail = tail_integral(m, cap, 0.0, -e);
  pc.far += pc.tail;
  pc.tail_bound = tail_bound_scale * std::pow(cap, -e) / e;
  return pc;
}

}  // namespace detail

/// 𝒩_{p,α}(f) = (∫_0^∞ t^{−αp/2} ∫ P_t(|f − f(Y)|^p)(Y) dY dt/t)^{1/p}.
///
/// For p = 2 and monomial degree ≤ 2 the inner integral is
/// (1 + e^{−t trB})‖f‖²₂ − 2⟨f, P_t f⟩ with P_t f exact. Otherwise P_t is
/// applied in the whitened variable (Gauss–Legendre for N = 1, Gauss–Hermite
/// above, the latter converging slowly for p ≠ 2); the part of the Y-integral outside the
/// support box is recovered from ∫ P_t g = e^{−t trB} ∫ g.
inline SeminormResult besov_seminorm(const OperatorSpec& spec, const TestFunction& f, double p, double alpha,
                                     const BesovOptions& o = {}) {
  if (!(p >= 1.0) || !(alpha > 0.0)) throw DomainError("besov_seminorm: need p >= 1 and alpha > 0");
  if (f.dim() != spec.dim) throw InputError("besov_seminorm: dimension mismatch");
  if (!f.is_schwartz()) throw DomainError("besov_seminorm: f must not have a polynomial part");
  SeminormResult res;
  if (f.terms().empty()) return res;
  const int n = spec.dim;
  const bool exact = p == 2.0 && f.max_degree() <= 2;
  const int panels = o.y_panels > 0 ? o.y_panels : (n == 1 ? 16 : (exact ? 12 : 6));
  const int order = n == 1 || exact ? o.y_order : std::min(o.y_order, 10);
  const auto [lo, hi] = f.support_box();
  const auto axes = detail::box_axes(lo, hi, panels, order);
  std::vector<Vec> ys;
  std::vector<double> ws, fy;
  for_each_tensor_node(axes, [&](const Vec& y, double w) {
    ys.push_back(y);
    ws.push_back(w);
    fy.push_back(f.eval(y));
  });
  double lp = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) lp += ws[i] * std::pow(std::abs(fy[i]), p);

  std::function<double(double)> jfun;
  if (exact) {
    jfun = [&, lp](double t) {
      const PropagatedFunction pt(spec, f, gramians(spec, t, false, false));
      double inner = 0.0;
      for (std::size_t i = 0; i < ys.size(); ++i) inner += ws[i] * fy[i] * pt.eval(ys[i]);
      return std::max(0.0, (1.0 + std::exp(-t * spec.trace_B)) * lp - 2.0 * inner);
    };
  } else {
    jfun = [&, lp](double t) {
      const KernelAtTime k(spec, t);
      double acc = 0.0;
      if (n == 1) {
        // |f(Z) − f(Y)|^p has a kink where Z = Y, which stalls Gauss–Hermite;
        // composite Gauss–Legendre in u with a break there converges quickly.
        const double m = k.gramians().exp_tB(0, 0);
        const double sig = std::sqrt(4.0 * t) * k.sqrt_K()(0, 0);
        for (std::size_t i = 0; i < ys.size(); ++i) {
          const double y = ys[i](0);
          const Rule1D ur = composite_legendre(-9.0, 9.0, 48, 8, {(1.0 - m) * y / sig});
          double e_i = 0.0;
          for (std::size_t j = 0; j < ur.size(); ++j) {
            const double u = ur.nodes[j];
            const double fz = f.eval(Vec::Constant(1, m * y + sig * u));
            e_i += ur.weights[j] * std::exp(-u * u) * (std::pow(std::abs(fz - fy[i]), p) - std::pow(std::abs(fz), p));
          }
          acc += ws[i] * e_i / std::sqrt(kPi);
        }
        return std::max(0.0, acc + std::exp(-t * spec.trace_B) * lp);
      }
      for (std::size_t i = 0; i < ys.size(); ++i) {
        acc += ws[i] * gh_expectation(k, ys[i], o.gh_order, [&](const Vec& z) {
                 const double fz = f.eval(z);
                 return std::pow(std::abs(fz - fy[i]), p) - std::pow(std::abs(fz), p);
               });
      }
      return std::max(0.0, acc + std::exp(-t * spec.trace_B) * lp);
    };
  }
  res.pieces = detail::besov_time_integral(jfun, 0.5 * alpha * p, o, std::pow(2.0, p) * lp);
  res.value = std::pow(std::max(0.0, res.pieces.near + res.pieces.far), 1.0 / p);
  return res;
}

/// Truncated seminorm 𝒩̃_{p,α}: the time integral restricted to (0, 1].
inline double truncated_besov_seminorm(const SeminormResult& r, double p) {
  return std::pow(std::max(0.0, r.pieces.near), 1.0 / p);
}

struct IndicatorOptions {
  double t_fit = 1e-6;  ///< below this time (or 1e-3 of the shortest side squared) D(t)/√t is extrapolated linearly in √t
  double tail_cap = 1e8;
  double panel_width = 1.0;
  int panel_order = 8;
  std::uint64_t samples = 4096;  ///< membership QMC points per time node and replicate
  std::uint64_t conditional_samples = 1024;  ///< QMC points of the polygon-overlap average
  int replicates = 8;
  std::uint64_t seed = 20240607;
  bool allow_large_s = false;
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }
// Antiderivative of Φ.
inline double psi(double z) { return z * normal_cdf(z) + normal_pdf(z); }

// ∫_a^b P(a < mX + σG < b) dX for standard normal G.
inline double interval_overlap(double a, double b, double m, double sigma) {
  return sigma / m *
         (psi((b - m * a) / sigma) - psi((b - m * b) / sigma) - psi((a - m * a) / sigma) + psi((a - m * b) / sigma));
}

using Polygon = std::vector<std::array<double, 2>>;

// Sutherland–Hodgman clipping of a polygon against the half-plane
// sign * (x_axis - bound) <= 0.
inline Polygon clip(const Polygon& poly, int axis, double bound, double sign) {
  Polygon out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    const double da = sign * (a[axis] - bound), db = sign * (b[axis] - bound);
    if (da <= 0.0) out.push_back(a);
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      const double r = da / (da - db);
      out.push_back({a[0] + r * (b[0] - a[0]), a[1] + r * (b[1] - a[1])});
    }
  }
  return out;
}

inline double polygon_area(const Polygon& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(a);
}

// |E ∩ M^{-1}(E − v)| for a planar box E.
inline double box_parallelogram_overlap(const BoxSet& e, const Mat& m_inv, const Vec& v) {
  Polygon poly;
  const double xs[4] = {e.lo(0), e.hi(0), e.hi(0), e.lo(0)};
  const double ys[4] = {e.lo(1), e.lo(1), e.hi(1), e.hi(1)};
  for (int k = 0; k < 4; ++k) {
    const Vec c = m_inv * (Vec(2) << xs[k] - v(0), ys[k] - v(1)).finished();
    poly.push_back({c(0), c(1)});
  }
  for (int axis = 0; axis < 2 && !poly.empty(); ++axis) {
    poly = clip(poly, axis, e.hi(axis), 1.0);
    if (!poly.empty()) poly = clip(poly, axis, e.lo(axis), -1.0);
  }
  return poly.size() < 3 ? 0.0 : polygon_area(poly);
}

inline bool closed_form_indicator(const OperatorSpec& spec) {
  if (spec.dim == 1) return true;
  const Mat q = spec.Q;
  return spec.B.isZero(0.0) && (q - Mat(q.diagonal().asDiagonal())).isZero(0.0);
}

inline void check_indicator_args(const OperatorSpec& spec, const BoxSet& e, double s, const IndicatorOptions& o,
                                 const char* who) {
  if (e.dim() != spec.dim) throw InputError(std::string(who) + ": dimension mismatch");
  if (!(s > 0.0 && s < 1.0)) throw DomainError(std::string(who) + ": s must lie in (0, 1)");
  if (s >= 0.5 && !o.allow_large_s)
    throw DomainError(std::string(who) +
                      ": s >= 1/2 makes the seminorm of an indicator infinite; set allow_large_s to override");
  if (spec.trace_B < 0.0) throw DomainError(std::string(who) + ": trB < 0, the time integral diverges");
}

struct DValue {
  double value = 0.0;
  double var = 0.0;  ///< variance of the estimate (0 when deterministic)
};

// C-free time integral ∫_0^∞ t^{-1-s} D(t) dt with the small-t extrapolation
// and a constant continuation beyond the cap. D must return a DValue per node
// index so that independent estimates can be combined.
template <class D>
SeminormResult indicator_time_integral(D&& dfun, double s, const IndicatorOptions& o, const BoxSet& e,
                                       double cap_tail_value) {
  // Small boxes need the fit window well below the squared shortest side.
  const double tf = std::min(o.t_fit, 1e-3 * std::pow((e.hi - e.lo).minCoeff(), 2));
  const Rule1D rule = log_time_rule(tf, o.tail_cap, o.panel_width, o.panel_order);
  SeminormResult r;
  double var = 0.0;
  // Least-squares fit of D(t)/√t = a + b√t on the nodes of the first two decades.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, nfit = 0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double t = rule.nodes[k];
    const DValue d = dfun(k, t);
    const double w = rule.weights[k] * std::pow(t, -1.0 - s);
    r.pieces.near += t <= 1.0 ? w * d.value : 0.0;
    r.pieces.far += t > 1.0 ? w * d.value : 0.0;
    var += w * w * d.var;
    if (t <= 100.0 * tf) {
      const double x = std::sqrt(t), y = d.value / x;
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      nfit += 1.0;
    }
  }
  const double det = nfit * sxx - sx * sx;
  const double b = det != 0.0 ? (nfit * sxy - sx * sy) / det : 0.0;
  const double a = (sy - b * sx) / std::max(nfit, 1.0);
  r.pieces.lower = a * std::pow(tf, 0.5 - s) / (0.5 - s) + b * std::pow(tf, 1.0 - s) / (1.0 - s);
  r.pieces.near += r.pieces.lower;
  r.pieces.tail = cap_tail_value;
  r.pieces.far += cap_tail_value;
  r.value = r.pieces.near + r.pieces.far;
  r.stderr_ = std::sqrt(var);
  return r;
}

}  // namespace detail

/// 𝒩_{1,2s}(1_E) = ∫_0^∞ t^{−1−s} ‖P_t 1_E − 1_E‖₁ dt, using
/// ‖P_t 1_E − 1_E‖₁ = |E|(1 + e^{−t trB}) − 2 ∫_E P_t 1_E.
///
/// The overlap ∫_E P_t 1_E is in closed form for N = 1 and for the heat case
/// (product of one-dimensional overlaps). For N = 2 it is averaged over the
/// Gaussian displacement by randomized QMC, each sample being the exact area
/// of a box intersected with a parallelogram; larger N use membership QMC.
inline SeminormResult indicator_besov_l1(const OperatorSpec& spec, const BoxSet& e, double s,
                                         const IndicatorOptions& o = {}) {
  detail::check_indicator_args(spec, e, s, o, "indicator_seminorm");
  const int n = spec.dim;
  const double vol = e.volume();
  auto overlap_closed = [&](double t) {
    const auto g = gramians(spec, t, false, false);
    double prod = 1.0;
    for (int d = 0; d < n; ++d) {
      const double sigma = std::sqrt(2.0 * t * g.K_t(d, d));
      const double m = n == 1 ? g.exp_tB(0, 0) : 1.0;
      prod *= detail::interval_overlap(e.lo(d), e.hi(d), m, sigma);
    }
    return prod;
  };
  auto overlap_qmc = [&](std::size_t node, double t) {
    const KernelAtTime k(spec, t);
    const Mat& m_inv = k.gramians().exp_minus_tB;
    const Mat l = std::sqrt(4.0 * t) * k.sqrt_K();
    const double base = vol * (1.0 + std::exp(-t * spec.trace_B));
    const CounterRng rng(o.seed, 0x1d1c);
    std::vector<double> reps;
    Vec q, u(n);
    for (int r = 0; r < o.replicates; ++r) {
      const KroneckerSequence seq(n == 2 ? 2 : 2 * n, rng, node * 1024 + r);
      double acc = 0.0;
      const std::uint64_t count = n == 2 ? o.conditional_samples : o.samples;
      for (std::uint64_t i = 0; i < count; ++i) {
        seq.point(i, q);
        if (n == 2) {
          for (int d = 0; d < 2; ++d) u(d) = normal_quantile(q(d)) / std::sqrt(2.0);
          acc += base - 2.0 * detail::box_parallelogram_overlap(e, m_inv, l * u);
        } else {
          Vec x = e.lo + (e.hi - e.lo).cwiseProduct(q.head(n));
          for (int d = 0; d < n; ++d) u(d) = normal_quantile(q(n + d)) / std::sqrt(2.0);
          const Vec z = k.gramians().exp_tB * x + l * u;
          const Vec w = m_inv * (x - l * u);
          acc += vol * ((e.contains(z) ? 0.0 : 1.0) + std::exp(-t * spec.trace_B) * (e.contains(w) ? 0.0 : 1.0));
        }
      }
      reps.push_back(acc / static_cast<double>(count));
    }
    const Estimate est = replicate_estimate(reps);
    return detail::DValue{est.mean, est.stderr_ * est.stderr_};
  };
  const bool closed = detail::closed_form_indicator(spec);
  auto dfun = [&](std::size_t node, double t) {
    if (closed) return detail::DValue{std::max(0.0, vol * (1.0 + std::exp(-t * spec.trace_B)) - 2.0 * overlap_closed(t)), 0.0};
    return overlap_qmc(node, t);
  };
  // Beyond the cap D is continued by |E|(1 + e^{−t trB}) minus a power-law
  // fit of the overlap.
  const double cap = o.tail_cap;
  double tail = vol * std::pow(cap, -s) / s;
  if (spec.trace_B == 0.0) tail *= 2.0;
  if (closed) {
    const detail::TailModel m = detail::fit_tail(overlap_closed, cap, 0.0);
    tail -= 2.0 * detail::tail_integral(m, cap, 0.0, -s);
  } else {
    tail = dfun(1u << 20, cap).value * std::pow(cap, -s) / s;
  }
  return detail::indicator_time_integral(dfun, s, o, e, tail);
}

/// ‖(−𝒜)^s 1_E‖₁ = C(s) 𝒩_{1,2s}(1_E).
inline SeminormResult indicator_seminorm(const OperatorSpec& spec, const BoxSet& e, double s,
                                         const IndicatorOptions& o = {}) {
  SeminormResult r = indicator_besov_l1(spec, e, s, o);
  const double c = balakrishnan_constant(s);
  r.value *= c;
  r.stderr_ *= c;
  r.pieces.near *= c;
  r.pieces.far *= c;
  r.pieces.lower *= c;
  r.pieces.tail *= c;
  return r;
}

/// 𝒩_{2,s}(1_E)² from its definition with the squared integrand, by
/// membership QMC over (Y, displacement). The Y-integral over the complement
/// of E is mapped into E by the change of variables Z = e^{tB}Y + displacement.
inline SeminormResult indicator_besov_l2_squared(const OperatorSpec& spec, const BoxSet& e, double s,
                                                 const IndicatorOptions& o = {}) {
  detail::check_indicator_args(spec, e, s, o, "indicator_besov_l2_squared");
  const int n = spec.dim;
  const double vol = e.volume();
  const CounterRng rng(o.seed, 0x2e2f);
  auto dfun = [&](std::size_t node, double t) {
    const KernelAtTime k(spec, t);
    const Mat& m = k.gramians().exp_tB;
    const Mat& m_inv = k.gramians().exp_minus_tB;
    const Mat l = std::sqrt(4.0 * t) * k.sqrt_K();
    const double shrink = std::exp(-t * spec.trace_B);
    std::vector<double> reps;
    Vec q, u(n);
    for (int r = 0; r < o.replicates; ++r) {
      const KroneckerSequence seq(2 * n, rng, node * 1024 + r);
      double acc = 0.0;
      for (std::uint64_t i = 0; i < o.samples; ++i) {
        seq.point(i, q);
        const Vec y = e.lo + (e.hi - e.lo).cwiseProduct(q.head(n));
        for (int d = 0; d < n; ++d) u(d) = normal_quantile(q(n + d)) / std::sqrt(2.0);
        const Vec lu = l * u;
        const double d_in = (e.contains(m * y + lu) ? 1.0 : 0.0) - 1.0;
        const double d_out = 1.0 - (e.contains(m_inv * (y - lu)) ? 1.0 : 0.0);
        acc += vol * (d_in * d_in + shrink * d_out * d_out);
      }
      reps.push_back(acc / static_cast<double>(o.samples));
    }
    const Estimate est = replicate_estimate(reps);
    return detail::DValue{est.mean, est.stderr_ * est.stderr_};
  };
  const double tail = dfun(1u << 20, o.tail_cap).value * std::pow(o.tail_cap, -s) / s;
  return detail::indicator_time_integral(dfun, s, o, e, tail);
}

struct PerimeterResult {
  double n2s_squared = 0.0;
  double n2s_squared_stderr = 0.0;
  double n12s = 0.0;
  double n12s_stderr = 0.0;
  double value = 0.0;
  double combined_stderr = 0.0;
  bool consistent = false;
};

/// s-perimeter 𝒩_{2,s}(1_E)² = 𝒩_{1,2s}(1_E), both sides computed
/// independently; `consistent` requires agreement within three combined
/// standard errors plus a 1e-3 relative quadrature allowance.
inline PerimeterResult s_perimeter(const OperatorSpec& spec, const BoxSet& e, double s,
                                   const IndicatorOptions& o = {}) {
  PerimeterResult r;
  const auto a = indicator_besov_l2_squared(spec, e, s, o);
  const auto b = indicator_besov_l1(spec, e, s, o);
  r.n2s_squared = a.value;
  r.n2s_squared_stderr = a.stderr_;
  r.n12s = b.value;
  r.n12s_stderr = b.stderr_;
  r.combined_stderr = std::hypot(a.stderr_, b.stderr_);
  const double w2 = a.stderr_ > 0.0 ? 1.0 / (a.stderr_ * a.stderr_) : 0.0;
  const double w1 = b.stderr_ > 0.0 ? 1.0 / (b.stderr_ * b.stderr_) : 0.0;
  r.value = b.stderr_ == 0.0 ? b.value : (a.stderr_ == 0.0 ? a.value : (w2 * a.value + w1 * b.value) / (w1 + w2));
  r.consistent = std::abs(a.value - b.value) <= 3.0 * r.combined_stderr + 1e-3 * std::abs(b.value);
  return r;
}

/// ‖(−𝒜)^s 1_E‖₁ for an interval, from the pointwise Balakrishnan integral of
/// P_t 1_E(X) integrated over X on grids graded towards the endpoints.
inline double fractional_indicator_l1(const OperatorSpec& spec, const BoxSet& e, double s, FracParams params = {}) {
  if (spec.dim != 1 || e.dim() != 1) throw UnsupportedError("fractional_indicator_l1: N = 1 only");
  detail::check_order(s, "fractional_indicator_l1");
  if (s >= 0.5) throw DomainError("fractional_indicator_l1: needs 0 < s < 1/2");
  params.s = s;
  const double a = e.lo(0), b = e.hi(0);
  const double bq = spec.B(0, 0), qq = spec.Q(0, 0);
  // Scalar drift: e^{tB} and 2tK(t) in closed form.
  auto pt = [&](double t, double x) {
    const double m = std::exp(bq * t) * x;
    const double var = std::abs(bq * t) < 1e-8 ? 2.0 * qq * t * (1.0 + bq * t) : qq * std::expm1(2.0 * bq * t) / bq;
    const double sig = std::sqrt(var);
    return detail::normal_cdf((b - m) / sig) - detail::normal_cdf((a - m) / sig);
  };
  auto frac_at = [&](double x) {
    const double inside = (x > a && x < b) ? 1.0 : 0.0;
    // P_t 1_E(X) departs from 1_E(X) once √t reaches the distance to ∂E, so
    // the first time node must lie well below that scale.
    const double d = std::min(std::abs(x - a), std::abs(x - b));
    FracParams pp = params;
    pp.t_min = std::min(params.t_min, 1e-6 * d * d / qq);
    const auto r = detail::balakrishnan_integral([&](double t) { return pt(t, x); }, inside, 0.0, s, pp);
    return std::abs(-balakrishnan_constant(s) * r.value);
  };
  // Distances from an endpoint on a log grid; |(−𝒜)^s 1_E| behaves like
  // d^{−2s} near the endpoints and like d^{−1−2s} far away.
  const double half = 0.5 * (b - a);
  auto side = [&](double lo_d, double hi_d, auto&& at, bool far_tail) {
    const Rule1D r = log_time_rule(lo_d, hi_d, 1.0, 10);
    double acc = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) acc += r.weights[k] * at(r.nodes[k]);
    acc += at(lo_d) * lo_d / (1.0 - 2.0 * s);
    if (far_tail) acc += at(hi_d) * hi_d / (2.0 * s);
    return acc;
  };
  const double d0 = 1e-8 * (b - a), d_far = 1e4 * (b - a);
  double total = 0.0;
  total += side(d0, half, [&](double d) { return frac_at(a + d); }, false);
  total += side(d0, half, [&](double d) { return frac_at(b - d); }, false);
  total += side(d0, d_far, [&](double d) { return frac_at(a - d); }, true);
  total += side(d0, d_far, [&](double d) { return frac_at(b + d); }, true);
  return total;
}

/// Classical Gagliardo double integral (∫∫ |1_E(X) − 1_E(Y)|^p |X − Y|^{−N−αp})^{1/p}
/// for a box, N ≤ 2. The Y-integral is done along rays from X, leaving the
/// exit distance ρ(X, θ): 2 ∫_E ∫_θ ρ^{−αp}/(αp) dθ dX.
inline double gagliardo_oracle(const BoxSet& e, double p, double alpha, int levels = 24, int order = 16) {
  const int n = e.dim();
  if (n > 2) throw UnsupportedError("gagliardo_oracle: N <= 2 required");
  if (!(p >= 1.0) || !(alpha > 0.0) || !(alpha * p < 1.0))
    throw DomainError("gagliardo_oracle: need p >= 1 and 0 < alpha p < 1 for a box");
  const double q = alpha * p;
  double total = 0.0;
  if (n == 1) {
    const double a = e.lo(0), b = e.hi(0);
    const Rule1D r = detail::edge_singular_rule(a, b, levels, order, q);
    for (std::size_t k = 0; k < r.size(); ++k) {
      const double x = r.nodes[k];
      total += r.weights[k] * (std::pow(x - a, -q) + std::pow(b - x, -q)) / q;
    }
  } else {
    const Rule1D rx = detail::edge_singular_rule(e.lo(0), e.hi(0), levels / 2, order, q);
    const Rule1D ry = detail::edge_singular_rule(e.lo(1), e.hi(1), levels / 2, order, q);
    const Rule1D& gl = gauss_legendre(order);
    for (std::size_t i = 0; i < rx.size(); ++i) {
      for (std::size_t j = 0; j < ry.size(); ++j) {
        const double x = rx.nodes[i], y = ry.nodes[j];
        // Corner directions split the circle into four sectors, each exiting
        // through one edge at distance d_e with ρ = d_e / cos(θ − θ_e).
        const double cx[4] = {e.hi(0), e.lo(0), e.lo(0), e.hi(0)};
        const double cy[4] = {e.hi(1), e.hi(1), e.lo(1), e.lo(1)};
        double ang[5];
        for (int c = 0; c < 4; ++c) ang[c] = std::atan2(cy[c] - y, cx[c] - x);
        for (int c = 1; c < 4; ++c)
          while (ang[c] <= ang[c - 1]) ang[c] += 2.0 * kPi;
        ang[4] = ang[0] + 2.0 * kPi;
        // Sector c runs between corners c and c+1: top, left, bottom, right edges.
        const double dist[4] = {e.hi(1) - y, x - e.lo(0), y - e.lo(1), e.hi(0) - x};
        const double normal[4] = {0.5 * kPi, kPi, 1.5 * kPi, 0.0};
        double ring = 0.0;
        for (int c = 0; c < 4; ++c) {
          const double h = 0.5 * (ang[c + 1] - ang[c]), mid = 0.5 * (ang[c + 1] + ang[c]);
          double sec = 0.0;
          for (std::size_t k = 0; k < gl.size(); ++k) {
            const double th = mid + h * gl.nodes[k];
            sec += gl.weights[k] * std::pow(std::cos(th - normal[c]), q);
          }
          ring += h * sec * std::pow(dist[c], -q);
        }
        total += rx.weights[i] * ry.weights[j] * ring / q;
      }
    }
  }
  return std::pow(2.0 * total, 1.0 / p);
}

/// Classical Gagliardo seminorm of a test function, N ≤ 2, by polar
/// integration in the increment h = Y − X.
inline double gagliardo_oracle(const TestFunction& f, double p, double alpha, int angular = 32) {
  const int n = f.dim();
  if (n > 2) throw UnsupportedError("gagliardo_oracle: N <= 2 required");
  if (!(p >= 1.0) || !(alpha > 0.0 && alpha < 1.0)) throw DomainError("gagliardo_oracle: need p >= 1, 0 < alpha < 1");
  if (!f.is_schwartz()) throw DomainError("gagliardo_oracle: f must not have a polynomial part");
  if (f.terms().empty()) return 0.0;
  const double q = alpha * p;
  const auto [lo, hi] = f.support_box();
  const double diam = (hi - lo).norm();
  double lmax = 0.0;
  for (const auto& t : f.terms()) lmax = std::max(lmax, max_eigenvalue(t.shape));
  const double ell = 1.0 / std::sqrt(lmax);
  std::vector<Vec> dirs;
  double dw = 0.0;
  if (n == 1) {
    dirs = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
    dw = 1.0;
  } else {
    for (int k = 0; k < angular; ++k) {
      const double phi = 2.0 * kPi * k / angular;
      dirs.push_back((Vec(2) << std::cos(phi), std::sin(phi)).finished());
    }
    dw = 2.0 * kPi / angular;
  }
  const double delta = ell;
  std::vector<double> breaks;
  for (int l = 1; l <= 20; ++l) breaks.push_back(std::ldexp(delta, -l));
  Rule1D radial = composite_legendre(breaks.back(), delta, 1, 12, breaks);
  const int outer_panels = std::max(1, static_cast<int>(std::ceil((diam + ell) / (0.5 * ell))));
  const Rule1D outer = composite_legendre(delta, delta + diam + ell, outer_panels, 12);
  radial.nodes.insert(radial.nodes.end(), outer.nodes.begin(), outer.nodes.end());
  radial.weights.insert(radial.weights.end(), outer.weights.begin(), outer.weights.end());
  const double r_end = delta + diam + ell;
  const auto axes = detail::box_axes(lo, hi, n == 1 ? 16 : 8, n == 1 ? 16 : 10);
  double total = 0.0;
  for_each_tensor_node(axes, [&](const Vec& x, double wx) {
    const double fx = f.eval(x);
    double acc = 0.0;
    for (const auto& th : dirs) {
      double line = 0.0;
      for (std::size_t k = 0; k < radial.size(); ++k) {
        const double r = radial.nodes[k];
        line += radial.weights[k] * std::pow(std::abs(f.eval(x + r * th) - fx), p) * std::pow(r, -1.0 - q);
      }
      acc += dw * line;
    }
    // Beyond r_end only |f(X)|^p remains.
    acc += dw * static_cast<double>(dirs.size()) * std::pow(std::abs(fx), p) * std::pow(r_end, -q) / q;
    total += wx * acc;
  });
  // X outside the box, where f(X) = 0: ∫_Y |f(Y)|^p ∫_{X ∉ box} |X − Y|^{−N−q} dX dY.
  // Along a ray from Y the complement starts at the exit distance ρ, giving
  // ∫_θ ρ^{−q}/q dθ.
  double outside = 0.0;
  {
    for_each_tensor_node(axes, [&](const Vec& y, double wy) {
      const double fy = std::pow(std::abs(f.eval(y)), p);
      if (fy == 0.0) return;
      double acc = 0.0;
      for (const auto& th : dirs) {
        double rho = std::numeric_limits<double>::infinity();
        for (int d = 0; d < n; ++d) {
          if (th(d) > 0.0) rho = std::min(rho, (hi(d) - y(d)) / th(d));
          if (th(d) < 0.0) rho = std::min(rho, (lo(d) - y(d)) / th(d));
        }
        acc += dw * std::pow(rho, -q) / q;
      }
      outside += wy * fy * acc;
    });
  }
  return std::pow(total + outside, 1.0 / p);
}

struct MappingCheck {
  double lhs_norm = 0.0;
  double bound = 0.0;
  double lp_norm_f = 0.0;
  double truncated_seminorm = 0.0;
  double holder_constant = 0.0;
  bool pass = false;
};

/// ‖(−𝒜)^s f‖_p against (2/s)‖f‖_p + C(p, α, s) 𝒩̃_{p,α}(f), with C = 1 for
/// p = 1 and C = ((α/2 − s) p')^{−1/p'} for p > 1.
inline MappingCheck besov_maps_to_lp_check(const OperatorSpec& spec, const TestFunction& f, double p, double alpha,
                                           double s, const BesovOptions& o = {}) {
  detail::check_order(s, "besov_maps_to_lp_check");
  if (spec.trace_B < 0.0) throw DomainError("besov_maps_to_lp_check: requires trB >= 0");
  const bool ok = (p > 1.0 && alpha > 2.0 * s) || (p == 1.0 && alpha >= 2.0 * s);
  if (!ok) throw DomainError("besov_maps_to_lp_check: need (p > 1, alpha > 2s) or (p = 1, alpha >= 2s)");
  MappingCheck r;
  if (f.terms().empty()) {
    r.pass = true;
    return r;
  }
  r.lp_norm_f = lq_norm(f, p);
  const SeminormResult sn = besov_seminorm(spec, f, p, alpha, o);
  r.truncated_seminorm = truncated_besov_seminorm(sn, p);
  if (p == 1.0) {
    r.holder_constant = 1.0;
  } else {
    const double pc = p / (p - 1.0);
    r.holder_constant = std::pow((0.5 * alpha - s) * pc, -1.0 / pc);
  }
  r.bound = 2.0 / s * r.lp_norm_f + r.holder_constant * r.truncated_seminorm;
  // ‖(−𝒜)^s f‖_p on the support box widened by its own width on each side.
  auto [lo, hi] = f.support_box();
  const Vec w = hi - lo;
  lo -= w;
  hi += w;
  const int n = spec.dim;
  const auto axes = detail::box_axes(lo, hi, n == 1 ? 48 : 12, n == 1 ? 16 : 8);
  std::vector<Vec> xs;
  std::vector<double> ws;
  for_each_tensor_node(axes, [&](const Vec& x, double wx) {
    xs.push_back(x);
    ws.push_back(wx);
  });
  const auto vals = fractional_power_on_grid(spec, f, s, xs);
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) acc += ws[i] * std::pow(std::abs(vals[i]), p);
  r.lhs_norm = std::pow(acc, 1.0 / p);
  r.pass = r.lhs_norm <= r.bound;
  return r;
}

}  // namespace hypok
