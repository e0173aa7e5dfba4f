#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hypok {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised for inputs that are well defined but not handled by this implementation.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed inputs (non-finite entries, shape mismatches).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an internal consistency check fails.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a caller-side precondition cannot be met (e.g. a support leak).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = std::numbers::pi;

inline bool all_finite(const Mat& m) { return m.allFinite(); }

/// e^{tM} by scaling and squaring with a diagonal Padé approximant.
inline Mat matrix_exponential(const Mat& m, double t = 1.0) {
  if (m.rows() != m.cols()) throw InputError("matrix_exponential: matrix must be square");
  if (!all_finite(m) || !std::isfinite(t)) throw InputError("matrix_exponential: non-finite input");
  const Mat scaled = t * m;
  return scaled.exp();
}

/// Symmetric positive semidefinite square root via eigendecomposition.
/// Negative eigenvalues from round-off are clamped to zero.
inline Mat sym_sqrt(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
  Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline double min_eigenvalue(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline Mat symmetrize(const Mat& s) { return 0.5 * (s + s.transpose()); }

/// Volume of the Euclidean unit ball in R^n.
inline double unit_ball_volume(int n) {
  return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// Surface area of the unit sphere in R^n.
inline double unit_sphere_area(int n) {
  return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
}

}  // namespace hypok
