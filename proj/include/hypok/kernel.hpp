#pragma once

#include "hypok/operator.hpp"

namespace hypok {

inline constexpr double kMinKernelTime = 1e-12;

struct KernelEval {
  double value = 0.0;
  double m_t = 0.0;
  double log_value = 0.0;
  double form_residual = 0.0;
};

struct KernelLogDerivatives {
  Vec grad_X;
  double dt = 0.0;
};

/// The fundamental solution p(X, Y, t) at a fixed time, with the Gramian data
/// computed once.
class KernelAtTime {
 public:
  KernelAtTime(const OperatorSpec& spec, double t) : spec_(spec), consts_(spec.dim) {
    if (!(t >= kMinKernelTime) || !std::isfinite(t)) throw DomainError("kernel: t must be >= 1e-12");
    g_ = hypok::gramians(spec, t);
    if (!g_.positive_definite) throw DomainError("kernel: operator is not hypoelliptic");
    volume_ = consts_.omega_N * std::sqrt(g_.det_tK);
    log_prefactor_ = std::log(consts_.c_N) - std::log(volume_);
    log_prefactor_c_ = -0.5 * spec.dim * std::log(4.0 * kPi) - t * spec.trace_B - 0.5 * std::log(g_.det_C);
    sqrt_K_ = sym_sqrt(g_.K_t);
  }

  const GramianBundle& gramians() const { return g_; }
  const OperatorSpec& spec() const { return spec_; }
  double t() const { return g_.t; }
  double volume() const { return volume_; }
  const Mat& sqrt_K() const { return sqrt_K_; }

  double pseudo_distance_sq(const Vec& x, const Vec& y) const {
    const Vec d = y - g_.exp_tB * x;
    return std::max(0.0, d.dot(g_.inv_K_t * d));
  }

  /// log p from c_N / V(t) · exp(-m_t² / (4t)).
  double log_value(const Vec& x, const Vec& y) const {
    return log_prefactor_ - pseudo_distance_sq(x, y) / (4.0 * g_.t);
  }

  /// log p from (4π)^{-N/2} e^{-t trB} det C^{-1/2} exp(-<C^{-1} d, d>/4), d = X - e^{-tB} Y.
  double log_value_backward_form(const Vec& x, const Vec& y) const {
    const Vec d = x - g_.exp_minus_tB * y;
    return log_prefactor_c_ - 0.25 * d.dot(g_.inv_C_t * d);
  }

  double value(const Vec& x, const Vec& y) const { return std::exp(log_value(x, y)); }

  KernelEval eval(const Vec& x, const Vec& y) const {
    KernelEval k;
    k.m_t = std::sqrt(pseudo_distance_sq(x, y));
    k.log_value = log_value(x, y);
    k.value = std::exp(k.log_value);
    const double alt = std::exp(log_value_backward_form(x, y));
    const double scale = std::max(std::abs(k.value), std::abs(alt));
    k.form_residual = scale > 0.0 ? std::abs(k.value - alt) / scale : 0.0;
    return k;
  }

  KernelLogDerivatives log_derivatives(const Vec& x, const Vec& y) const {
    const Vec d = x - g_.exp_minus_tB * y;
    const Vec w = g_.inv_C_t * d;
    KernelLogDerivatives r;
    r.grad_X = -0.5 * w;
    r.dt = -0.5 * (spec_.Q * g_.inv_C_t).trace() - 0.5 * (spec_.B * x).dot(w) + 0.25 * w.dot(spec_.Q * w);
    return r;
  }

  /// Y = e^{tB} X + sqrt(4t) K(t)^{1/2} u maps the weight e^{-|u|²} to p(X, ·, t).
  Vec whiten(const Vec& x, const Vec& u) const {
    return g_.exp_tB * x + std::sqrt(4.0 * g_.t) * (sqrt_K_ * u);
  }

 private:
  OperatorSpec spec_;
  KernelConstants consts_;
  GramianBundle g_;
  double volume_ = 0.0;
  double log_prefactor_ = 0.0;
  double log_prefactor_c_ = 0.0;
  Mat sqrt_K_;
};

inline double pseudo_distance(const OperatorSpec& spec, const Vec& x, const Vec& y, double t) {
  return std::sqrt(KernelAtTime(spec, t).pseudo_distance_sq(x, y));
}

/// V(t) = ω_N det(tK(t))^{1/2}.
inline double volume(const OperatorSpec& spec, double t) {
  if (!(t > 0.0)) throw DomainError("volume: t must be positive");
  return KernelConstants(spec.dim).omega_N * std::sqrt(gramians(spec, t).det_tK);
}

inline KernelEval heat_kernel(const OperatorSpec& spec, const Vec& x, const Vec& y, double t) {
  return KernelAtTime(spec, t).eval(x, y);
}

inline bool pseudo_ball_contains(const OperatorSpec& spec, const Vec& x, double r, double t, const Vec& y) {
  if (!(r > 0.0)) throw DomainError("pseudo_ball_contains: r must be positive");
  return pseudo_distance(spec, x, y, t) < r;
}

inline KernelLogDerivatives kernel_log_derivatives(const OperatorSpec& spec, const Vec& x, const Vec& y,
                                                   double t) {
  return KernelAtTime(spec, t).log_derivatives(x, y);
}

struct IdentitySides {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// <Q ∇ log p, ∇ log p> + <BX, ∇ log p> - ∂_t log p at (X, Y, t - τ) against
/// ½ tr(Q C^{-1}(t - τ)).
inline IdentitySides liyau_kernel_identity(const OperatorSpec& spec, const Vec& x, const Vec& y, double t,
                                           double tau = 0.0) {
  if (!(t > tau)) throw DomainError("liyau_kernel_identity: need t > tau");
  const KernelAtTime k(spec, t - tau);
  const auto d = k.log_derivatives(x, y);
  IdentitySides s;
  s.lhs = d.grad_X.dot(spec.Q * d.grad_X) + (spec.B * x).dot(d.grad_X) - d.dt;
  s.rhs = 0.5 * (spec.Q * k.gramians().inv_C_t).trace();
  return s;
}

}  // namespace hypok
