#pragma once

#include "hypok/linalg.hpp"

#include <string>

namespace hypok {

/// Constant-coefficient Kolmogorov operator tr(Q D^2 u) + <BX, grad u>.
struct OperatorSpec {
  int dim = 0;
  Mat Q;
  Mat B;
  double trace_B = 0.0;
  std::string name = "custom";

  OperatorSpec() = default;

  /// Validates shapes and symmetry/semidefiniteness of Q.
  OperatorSpec(Mat q, Mat b, std::string label = "custom")
      : dim(static_cast<int>(q.rows())), Q(std::move(q)), B(std::move(b)), name(std::move(label)) {
    if (dim < 1) throw InputError("OperatorSpec: dimension must be positive");
    if (Q.cols() != dim || B.rows() != dim || B.cols() != dim)
      throw InputError("OperatorSpec: Q and B must be dim x dim");
    if (!Q.allFinite() || !B.allFinite()) throw InputError("OperatorSpec: non-finite entries");
    const double qn = Q.norm();
    const double tol_sym = 1e-12 * std::max(qn, 1e-300);
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > tol_sym)
      throw InputError("OperatorSpec: Q must be symmetric");
    Q = symmetrize(Q);
    if (min_eigenvalue(Q) < -tol_sym) throw InputError("OperatorSpec: Q must be positive semidefinite");
    trace_B = B.trace();
  }

  static OperatorSpec heat(int n) { return {Mat::Identity(n, n), Mat::Zero(n, n), "heat"}; }

  static OperatorSpec ornstein_uhlenbeck(int n) {
    return {Mat::Identity(n, n), -Mat::Identity(n, n), "ornstein_uhlenbeck"};
  }

  /// Q = diag(I_n, 0_n), B = [[0, 0], [I_n, 0]]: the operator Δ_v + <v, ∇_x>.
  static OperatorSpec kolmogorov(int n) {
    Mat q = Mat::Zero(2 * n, 2 * n);
    q.topLeftCorner(n, n).setIdentity();
    Mat b = Mat::Zero(2 * n, 2 * n);
    b.bottomLeftCorner(n, n).setIdentity();
    return {q, b, "kolmogorov"};
  }
};

/// Normalizing constants of the kernel: c_N^{-1} = 4^{N/2} Γ(N/2+1) and the
/// unit-ball volume ω_N.
struct KernelConstants {
  double c_N = 0.0;
  double omega_N = 0.0;

  explicit KernelConstants(int n)
      : c_N(1.0 / (std::pow(4.0, 0.5 * n) * std::tgamma(0.5 * n + 1.0))), omega_N(unit_ball_volume(n)) {}
};

/// Covariance data of the operator at time t.
struct GramianBundle {
  double t = 0.0;
  Mat exp_tB;
  Mat exp_minus_tB;
  Mat K_t;  ///< (1/t) ∫_0^t e^{sB} Q e^{sB^T} ds
  Mat C_t;  ///< ∫_0^t e^{-sB} Q e^{-sB^T} ds
  double det_tK = 0.0;
  double det_C = 0.0;
  Mat inv_K_t;
  Mat inv_C_t;
  bool positive_definite = false;
};

namespace detail {

// Van Loan: exp([[-A, Q], [0, A^T]] t) has blocks F12 and F22 with
// F22^T F12 = ∫_0^t e^{sA} Q e^{sA^T} ds. For large ‖A‖t the block
// exponential is taken on t / 2^k and the integral is doubled k times via
// G(2t) = G(t) + e^{tA} G(t) e^{tA^T}, which avoids overflow in the
// off-diagonal blocks when A has eigenvalues of both signs.
struct VanLoanResult {
  Mat integral;     ///< ∫_0^t e^{sA} Q e^{sA^T} ds
  Mat exponential;  ///< e^{tA}
};

inline VanLoanResult van_loan(const Mat& a, const Mat& q, double t) {
  const int n = static_cast<int>(a.rows());
  const double scale = a.lpNorm<1>() * t;
  const int k = scale > 2.0 ? static_cast<int>(std::ceil(std::log2(scale / 2.0))) : 0;
  const double t0 = std::ldexp(t, -k);
  Mat m = Mat::Zero(2 * n, 2 * n);
  m.topLeftCorner(n, n) = -a;
  m.topRightCorner(n, n) = q;
  m.bottomRightCorner(n, n) = a.transpose();
  const Mat f = matrix_exponential(m, t0);
  VanLoanResult r;
  r.exponential = f.bottomRightCorner(n, n).transpose();
  r.integral = symmetrize(r.exponential * f.topRightCorner(n, n));
  for (int i = 0; i < k; ++i) {
    r.integral = symmetrize(r.integral + r.exponential * r.integral * r.exponential.transpose());
    r.exponential = r.exponential * r.exponential;
  }
  return r;
}

inline Mat van_loan_integral(const Mat& a, const Mat& q, double t) { return van_loan(a, q, t).integral; }

}  // namespace detail

/// Positive-definiteness threshold relative to the scale of K(1).
inline double pd_tolerance(const Mat& k1) { return 1e-10 * std::max(k1.norm(), 1e-300); }

/// K(t), C(t) and the matrix exponentials at time t.
inline GramianBundle gramians(const OperatorSpec& spec, double t, bool require_pd = false,
                              bool with_backward = true) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("gramians: t must be positive");
  GramianBundle g;
  g.t = t;
  const auto fwd = detail::van_loan(spec.B, spec.Q, t);
  const Mat& tK = fwd.integral;
  g.exp_tB = fwd.exponential;
  g.K_t = tK / t;
  if (with_backward) {
    const auto bwd = detail::van_loan(-spec.B, spec.Q, t);
    g.C_t = bwd.integral;
    g.exp_minus_tB = bwd.exponential;
  }
  const Eigen::LLT<Mat> llt_k(tK);
  g.positive_definite = llt_k.info() == Eigen::Success && min_eigenvalue(tK) > 0.0;
  g.det_tK = tK.determinant();
  if (with_backward) g.det_C = g.C_t.determinant();
  if (g.positive_definite) {
    g.inv_K_t = symmetrize(g.K_t.llt().solve(Mat::Identity(spec.dim, spec.dim)));
    if (with_backward) g.inv_C_t = symmetrize(g.C_t.llt().solve(Mat::Identity(spec.dim, spec.dim)));
  } else if (require_pd) {
    throw ConsistencyError("gramians: K(t) is singular for an operator required to be hypoelliptic");
  }
  return g;
}

/// Diagnostics of the two hypoellipticity tests.
struct HypoellipticityReport {
  bool hypoelliptic = false;
  double lambda_min_K1 = 0.0;
  double tol_pd = 0.0;
  int kalman_rank = 0;
  bool gramian_test = false;
  bool kalman_test = false;
  bool tests_agree = false;
};

/// Rank of [Q^{1/2}, B Q^{1/2}, ..., B^{N-1} Q^{1/2}] with a relative SVD threshold.
inline int kalman_rank(const OperatorSpec& spec) {
  const int n = spec.dim;
  const Mat root = sym_sqrt(spec.Q);
  Mat ctrl(n, n * n);
  Mat block = root;
  for (int k = 0; k < n; ++k) {
    ctrl.middleCols(k * n, n) = block;
    block = spec.B * block;
  }
  Eigen::JacobiSVD<Mat> svd(ctrl);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double tol = sv(0) * 1e-10;
  int rank = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (sv(k) > tol) ++rank;
  return rank;
}

inline HypoellipticityReport hypoellipticity_check(const OperatorSpec& spec) {
  HypoellipticityReport r;
  const Mat k1 = detail::van_loan_integral(spec.B, spec.Q, 1.0);
  r.lambda_min_K1 = min_eigenvalue(k1);
  r.tol_pd = pd_tolerance(k1);
  r.gramian_test = r.lambda_min_K1 > r.tol_pd;
  r.kalman_rank = kalman_rank(spec);
  r.kalman_test = r.kalman_rank == spec.dim;
  r.tests_agree = r.gramian_test == r.kalman_test;
  r.hypoelliptic = r.gramian_test && r.kalman_test;
  return r;
}

/// Throws unless the operator passes both hypoellipticity tests.
inline void require_hypoelliptic(const OperatorSpec& spec, const char* where) {
  if (!hypoellipticity_check(spec).hypoelliptic)
    throw DomainError(std::string(where) + ": operator is not hypoelliptic");
}

/// Residuals of the determinant identity
///   tr(Q C^{-1}(t)) = d/dt log det C(t) + 2 tr B
/// (derivative by central differences, h = 1e-5 t) and of the Gramian ODE
///   e^{-tB} Q e^{-tB^T} = Q - B C(t) - C(t) B^T.
/// The matrix residual is scaled by ‖Q‖ + 2‖B‖‖C(t)‖ so that it is
/// meaningful when C(t) grows exponentially.
struct LogdetResidual {
  double trace_residual = 0.0;
  double matrix_residual = 0.0;
  double value() const { return std::max(trace_residual, matrix_residual); }
};

inline LogdetResidual logdet_derivative_identity(const OperatorSpec& spec, double t) {
  if (!(t > 0.0)) throw DomainError("logdet_derivative_identity: t must be positive");
  const GramianBundle g = gramians(spec, t, true);
  const double h = 1e-5 * t;
  const auto logdet = [&](double s) {
    const Mat c = gramians(spec, s).C_t;
    return std::log(c.llt().matrixL().determinant()) * 2.0;
  };
  const double deriv = (logdet(t + h) - logdet(t - h)) / (2.0 * h);
  LogdetResidual r;
  r.trace_residual = std::abs((spec.Q * g.inv_C_t).trace() - deriv - 2.0 * spec.trace_B);
  const Mat lhs = g.exp_minus_tB * spec.Q * g.exp_minus_tB.transpose();
  const Mat rhs = spec.Q - spec.B * g.C_t - g.C_t * spec.B.transpose();
  const double scale = spec.Q.norm() + 2.0 * spec.B.norm() * g.C_t.norm();
  r.matrix_residual = (lhs - rhs).norm() / std::max(scale, 1e-300);
  return r;
}

}  // namespace hypok
