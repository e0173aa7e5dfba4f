#pragma once

#include "hypok/operator.hpp"
#include "hypok/rng.hpp"

#include <vector>

namespace hypok {

/// coeff · Π (Y - center)^monomial · exp(-<shape (Y - center), Y - center>)
struct GaussianTerm {
  double coeff = 1.0;
  Vec center;
  Mat shape;
  std::vector<int> monomial;

  int degree() const {
    int d = 0;
    for (int m : monomial) d += m;
    return d;
  }
};

/// c + <a, Y> + <H Y, Y>. Not integrable unless zero; it lets the family
/// contain the linear and constant functions for which several inequalities
/// become equalities.
struct PolynomialPart {
  double constant = 0.0;
  Vec linear;
  Mat quadratic;

  bool is_zero() const {
    return constant == 0.0 && (linear.size() == 0 || linear.isZero(0.0)) &&
           (quadratic.size() == 0 || quadratic.isZero(0.0));
  }
};

/// Finite sums of Gaussian-times-monomial terms plus an optional polynomial part.
class TestFunction {
 public:
  static constexpr int kMaxDegree = 4;

  TestFunction() = default;
  explicit TestFunction(int dim) : dim_(dim) {
    poly_.linear = Vec::Zero(dim);
    poly_.quadratic = Mat::Zero(dim, dim);
  }

  /// Single centered Gaussian coeff · exp(-<shape (Y-center), Y-center>).
  static TestFunction gaussian(const Vec& center, const Mat& shape, double coeff = 1.0) {
    TestFunction f(static_cast<int>(center.size()));
    f.add_term({coeff, center, shape, std::vector<int>(center.size(), 0)});
    return f;
  }

  static TestFunction isotropic_gaussian(int dim, double width_sq = 1.0, double coeff = 1.0) {
    return gaussian(Vec::Zero(dim), Mat::Identity(dim, dim) / width_sq, coeff);
  }

  static TestFunction linear(const Vec& a, double constant = 0.0) {
    TestFunction f(static_cast<int>(a.size()));
    f.poly_.linear = a;
    f.poly_.constant = constant;
    return f;
  }

  static TestFunction constant(int dim, double c) {
    TestFunction f(dim);
    f.poly_.constant = c;
    return f;
  }

  TestFunction& add_term(GaussianTerm term) {
    if (static_cast<int>(term.center.size()) != dim_ || term.shape.rows() != dim_ ||
        term.shape.cols() != dim_)
      throw InputError("TestFunction: term dimension mismatch");
    if (term.monomial.empty()) term.monomial.assign(dim_, 0);
    if (static_cast<int>(term.monomial.size()) != dim_) throw InputError("TestFunction: monomial size");
    for (int m : term.monomial)
      if (m < 0) throw InputError("TestFunction: negative exponent");
    if (term.degree() > kMaxDegree) throw UnsupportedError("TestFunction: monomial degree above 4");
    if ((term.shape - term.shape.transpose()).cwiseAbs().maxCoeff() > 1e-12 * term.shape.norm())
      throw InputError("TestFunction: shape must be symmetric");
    term.shape = symmetrize(term.shape);
    if (!(min_eigenvalue(term.shape) > 0.0)) throw InputError("TestFunction: shape must be positive definite");
    terms_.push_back(std::move(term));
    return *this;
  }

  TestFunction& set_polynomial(double c, const Vec& a, const Mat& h) {
    poly_.constant = c;
    poly_.linear = a;
    poly_.quadratic = symmetrize(h);
    return *this;
  }

  int dim() const { return dim_; }
  const std::vector<GaussianTerm>& terms() const { return terms_; }
  const PolynomialPart& polynomial() const { return poly_; }

  /// True when the function decays (no polynomial part).
  bool is_schwartz() const { return poly_.is_zero(); }

  int max_degree() const {
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, t.degree());
    if (!poly_.quadratic.isZero(0.0)) d = std::max(d, 2);
    return d;
  }

  double eval(const Vec& y) const {
    double v = poly_.constant + poly_.linear.dot(y) + y.dot(poly_.quadratic * y);
    for (const auto& t : terms_) {
      const Vec d = y - t.center;
      v += t.coeff * monomial_value(t.monomial, d) * std::exp(-d.dot(t.shape * d));
    }
    return v;
  }

  Vec gradient(const Vec& y) const {
    Vec g = poly_.linear + 2.0 * poly_.quadratic * y;
    for (const auto& t : terms_) {
      const Vec d = y - t.center;
      const Vec ad = 2.0 * (t.shape * d);
      const double e = t.coeff * std::exp(-d.dot(t.shape * d));
      const double p = monomial_value(t.monomial, d);
      g += e * (monomial_gradient(t.monomial, d) - p * ad);
    }
    return g;
  }

  Mat hessian(const Vec& y) const {
    Mat h = 2.0 * poly_.quadratic;
    for (const auto& t : terms_) {
      const Vec d = y - t.center;
      const Vec ad = 2.0 * (t.shape * d);
      const double e = t.coeff * std::exp(-d.dot(t.shape * d));
      const double p = monomial_value(t.monomial, d);
      const Vec dp = monomial_gradient(t.monomial, d);
      h += e * (monomial_hessian(t.monomial, d) - ad * dp.transpose() - dp * ad.transpose() -
                p * 2.0 * t.shape + p * ad * ad.transpose());
    }
    return h;
  }

  /// Value of the operator tr(Q D^2 f) + <BX, grad f> at X.
  double generator_value(const OperatorSpec& spec, const Vec& x) const {
    return (spec.Q * hessian(x)).trace() + (spec.B * x).dot(gradient(x));
  }

  TestFunction scaled(double c) const {
    TestFunction f = *this;
    for (auto& t : f.terms_) t.coeff *= c;
    f.poly_.constant *= c;
    f.poly_.linear *= c;
    f.poly_.quadratic *= c;
    return f;
  }

  TestFunction operator+(const TestFunction& other) const {
    if (other.dim_ != dim_) throw InputError("TestFunction: dimension mismatch in sum");
    TestFunction f = *this;
    for (const auto& t : other.terms_) f.terms_.push_back(t);
    f.poly_.constant += other.poly_.constant;
    f.poly_.linear += other.poly_.linear;
    f.poly_.quadratic += other.poly_.quadratic;
    return f;
  }

  /// Dilation f(λY).
  TestFunction dilated(double lambda) const {
    TestFunction f(dim_);
    for (const auto& t : terms_) {
      GaussianTerm u = t;
      u.center = t.center / lambda;
      u.shape = t.shape * lambda * lambda;
      u.coeff = t.coeff * std::pow(lambda, t.degree());
      f.terms_.push_back(u);
    }
    f.poly_.constant = poly_.constant;
    f.poly_.linear = poly_.linear * lambda;
    f.poly_.quadratic = poly_.quadratic * lambda * lambda;
    return f;
  }

  /// Componentwise box [lo, hi] outside of which every Gaussian term is below
  /// `rel_tol` times its peak scale.
  std::pair<Vec, Vec> support_box(double rel_tol = 1e-16) const {
    Vec lo = Vec::Constant(dim_, 0.0), hi = Vec::Constant(dim_, 0.0);
    bool first = true;
    for (const auto& t : terms_) {
      const Mat cov = t.shape.inverse();
      // exp(-q) < tol for q > log(1/tol); allow headroom for the monomial factor.
      const double r2 = std::log(1.0 / rel_tol) + 4.0 * t.degree() + 4.0;
      for (int i = 0; i < dim_; ++i) {
        const double w = std::sqrt(r2 * cov(i, i));
        const double l = t.center(i) - w, h = t.center(i) + w;
        lo(i) = first ? l : std::min(lo(i), l);
        hi(i) = first ? h : std::max(hi(i), h);
      }
      first = false;
    }
    return {lo, hi};
  }

 private:
  static double monomial_value(const std::vector<int>& m, const Vec& d) {
    double p = 1.0;
    for (std::size_t i = 0; i < m.size(); ++i)
      for (int k = 0; k < m[i]; ++k) p *= d(static_cast<Eigen::Index>(i));
    return p;
  }

  static Vec monomial_gradient(const std::vector<int>& m, const Vec& d) {
    const int n = static_cast<int>(d.size());
    Vec g = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (m[i] == 0) continue;
      std::vector<int> mi = m;
      mi[i] -= 1;
      g(i) = m[i] * monomial_value(mi, d);
    }
    return g;
  }

  static Mat monomial_hessian(const std::vector<int>& m, const Vec& d) {
    const int n = static_cast<int>(d.size());
    Mat h = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      if (m[i] == 0) continue;
      for (int j = 0; j < n; ++j) {
        std::vector<int> mij = m;
        double c = m[i];
        mij[i] -= 1;
        if (mij[j] == 0) continue;
        c *= mij[j];
        mij[j] -= 1;
        h(i, j) = c * monomial_value(mij, d);
      }
    }
    return h;
  }

  int dim_ = 0;
  std::vector<GaussianTerm> terms_;
  PolynomialPart poly_;
};

/// Exact P_t f as a new test function, from the Gaussian convolution with mean
/// e^{tB}X and covariance 2tK(t). Supports monomials of degree ≤ 2.
inline TestFunction propagate(const OperatorSpec& spec, const TestFunction& f, const GramianBundle& g) {
  const int n = f.dim();
  if (n != spec.dim) throw InputError("propagate: dimension mismatch");
  const Mat& e = g.exp_tB;
  const Mat s = 2.0 * g.t * g.K_t;
  TestFunction out(n);
  for (const auto& term : f.terms()) {
    if (term.degree() > 2) throw UnsupportedError("propagate: monomial degree above 2");
    const Mat gcov = (2.0 * term.shape).inverse();
    const Mat sg = s + gcov;
    const Eigen::LLT<Mat> llt(sg);
    const Mat w = llt.solve(Mat::Identity(n, n));
    const double z0 = std::sqrt(gcov.determinant() / sg.determinant());
    const Vec c_new = g.exp_minus_tB * term.center;
    const Mat shape_new = symmetrize(0.5 * e.transpose() * w * e);
    const Mat m = gcov * w * e;
    const Mat pi = symmetrize(s * w * gcov);
    const double amp = term.coeff * z0;

    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < term.monomial[i]; ++k) idx.push_back(i);

    auto push = [&](double c, std::vector<int> mono) {
      if (c != 0.0) out.add_term({c, c_new, shape_new, std::move(mono)});
    };
    if (idx.empty()) {
      push(amp, std::vector<int>(n, 0));
    } else if (idx.size() == 1) {
      for (int j = 0; j < n; ++j) {
        std::vector<int> mono(n, 0);
        mono[j] = 1;
        push(amp * m(idx[0], j), mono);
      }
    } else {
      const int i = idx[0], j = idx[1];
      push(amp * pi(i, j), std::vector<int>(n, 0));
      for (int k = 0; k < n; ++k)
        for (int l = k; l < n; ++l) {
          double c = m(i, k) * m(j, l);
          if (l != k) c += m(i, l) * m(j, k);
          std::vector<int> mono(n, 0);
          mono[k] += 1;
          mono[l] += 1;
          push(amp * c, mono);
        }
    }
  }
  const auto& p = f.polynomial();
  out.set_polynomial(p.constant + (p.quadratic * s).trace(), e.transpose() * p.linear,
                     e.transpose() * p.quadratic * e);
  return out;
}

inline TestFunction propagate(const OperatorSpec& spec, const TestFunction& f, double t) {
  return propagate(spec, f, gramians(spec, t));
}

/// Exact value of P_t f(X) = ∫ p(X,Y,t) f(Y) dY for monomial degree ≤ 2.
inline double exact_semigroup_oracle(const OperatorSpec& spec, const TestFunction& f, double t, const Vec& x) {
  if (!(t > 0.0)) throw DomainError("exact_semigroup_oracle: t must be positive");
  return propagate(spec, f, t).eval(x);
}

/// Radial cutoff: 1 on the inner ball, 0 outside the outer ball, quintic
/// smoothstep in between.
struct CompactBump {
  Vec center;
  double inner_radius = 0.5;
  double outer_radius = 1.0;

  CompactBump() = default;
  CompactBump(Vec c, double ri, double ro) : center(std::move(c)), inner_radius(ri), outer_radius(ro) {
    if (!(ri > 0.0) || !(ro > ri)) throw InputError("CompactBump: need 0 < inner < outer");
  }

  int dim() const { return static_cast<int>(center.size()); }

  double eval(const Vec& y) const {
    const double r = (y - center).norm();
    if (r <= inner_radius) return 1.0;
    if (r >= outer_radius) return 0.0;
    const double x = (r - inner_radius) / (outer_radius - inner_radius);
    return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
  }

  Vec gradient(const Vec& y) const {
    const Vec d = y - center;
    const double r = d.norm();
    if (r <= inner_radius || r >= outer_radius) return Vec::Zero(d.size());
    const double w = outer_radius - inner_radius;
    const double x = (r - inner_radius) / w;
    const double ds = 30.0 * x * x * (1.0 - x) * (1.0 - x);
    return (-ds / w / r) * d;
  }
};

/// bump · modulator; compactly supported in the bump's outer ball.
struct LocalizedFunction {
  CompactBump bump;
  TestFunction modulator;

  double eval(const Vec& y) const {
    const double b = bump.eval(y);
    return b == 0.0 ? 0.0 : b * modulator.eval(y);
  }

  Vec gradient(const Vec& y) const {
    const double b = bump.eval(y);
    if (b == 0.0) return Vec::Zero(y.size());
    return bump.gradient(y) * modulator.eval(y) + b * modulator.gradient(y);
  }
};

/// Parameters for drawing random members of the family.
struct RandomFunctionOptions {
  int min_terms = 1;
  int max_terms = 3;
  int max_degree = 2;
  double center_range = 1.0;
  double min_shape_eig = 0.3;
  double max_shape_eig = 2.0;
  bool nonnegative = false;
};

/// Deterministic random test function: draw k of stream `rng`.
inline TestFunction random_test_function(int dim, const CounterRng& rng, std::uint64_t k,
                                         const RandomFunctionOptions& opt = {}) {
  std::uint64_t c = k * 4096;
  auto u = [&] { return rng.uniform(c++); };
  TestFunction f(dim);
  const int nt = opt.min_terms + static_cast<int>(u() * (opt.max_terms - opt.min_terms + 1));
  for (int i = 0; i < std::min(nt, opt.max_terms); ++i) {
    GaussianTerm t;
    t.center = Vec(dim);
    for (int d = 0; d < dim; ++d) t.center(d) = opt.center_range * (2.0 * u() - 1.0);
    Mat a(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int s = 0; s < dim; ++s) a(r, s) = 2.0 * u() - 1.0;
    const Eigen::HouseholderQR<Mat> qr(a);
    const Mat rot = qr.householderQ();
    Vec eig(dim);
    for (int d = 0; d < dim; ++d) eig(d) = opt.min_shape_eig + (opt.max_shape_eig - opt.min_shape_eig) * u();
    t.shape = symmetrize(rot * eig.asDiagonal() * rot.transpose());
    t.monomial.assign(dim, 0);
    if (!opt.nonnegative) {
      const int deg = static_cast<int>(u() * (opt.max_degree + 1));
      for (int j = 0; j < std::min(deg, opt.max_degree); ++j)
        t.monomial[static_cast<int>(u() * dim) % dim] += 1;
      t.coeff = 2.0 * u() - 1.0;
      if (std::abs(t.coeff) < 0.1) t.coeff = t.coeff < 0 ? -0.1 : 0.1;
    } else {
      t.coeff = 0.2 + u();
    }
    f.add_term(t);
  }
  return f;
}

}  // namespace hypok
