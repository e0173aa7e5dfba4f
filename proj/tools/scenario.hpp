#pragma once

#include "hypok/hypok.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypok::cli {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Invalid or unreadable configuration; `field` is a JSON-pointer-like path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct CheckConfig {
  std::string name;
  int count = 0;  ///< 0 selects the check's default
  json params = json::object();
};

struct ScenarioConfig {
  std::string preset = "heat";
  int dim = 1;
  OperatorSpec spec = OperatorSpec::heat(1);
  QuadratureSpec quad;
  bool checks_given = false;
  std::vector<CheckConfig> checks;
  std::string output_path = "report.csv";
};

struct ReportRow {
  std::string check;
  std::string preset;
  ParamList params;
  std::string error;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  double stderr_ = 0.0;
  double tol = 0.0;
  bool pass = false;

  std::string params_json() const {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : params) j[k] = v;
    if (!error.empty()) j["error"] = error;
    return j.dump();
  }
};

struct PlotPoint {
  std::string series;
  double x = 0.0;
  double y = 0.0;
};

struct VerificationReport {
  std::string preset;
  std::vector<ReportRow> rows;
  std::vector<PlotPoint> plot;
  ParamList calibration;
  std::vector<std::string> skipped;
  QuadratureSpec quad;
  int passed = 0;
  int failed = 0;
};

namespace detail {

inline Mat parse_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty array of rows");
  const int n = static_cast<int>(j.size());
  Mat m(n, n);
  for (int r = 0; r < n; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw ConfigError(field + "/" + std::to_string(r), "expected a row of length " + std::to_string(n));
    for (int c = 0; c < n; ++c) {
      if (!row[c].is_number()) throw ConfigError(field + "/" + std::to_string(r) + "/" + std::to_string(c), "not a number");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& field) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(field + "/" + key, "wrong type");
  }
}

}  // namespace detail

inline ScenarioConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("", "top level must be an object");
  ScenarioConfig c;
  c.preset = detail::get_or<std::string>(j, "preset", "heat", "");
  try {
    if (c.preset == "heat" || c.preset == "ornstein_uhlenbeck") {
      c.dim = detail::get_or<int>(j, "dim", 1, "");
      if (c.dim < 1 || c.dim > 4) throw ConfigError("/dim", "must be between 1 and 4");
      c.spec = c.preset == "heat" ? OperatorSpec::heat(c.dim) : OperatorSpec::ornstein_uhlenbeck(c.dim);
    } else if (c.preset == "kolmogorov") {
      const int n = detail::get_or<int>(j, "n", 1, "");
      if (n < 1 || n > 2) throw ConfigError("/n", "must be 1 or 2");
      c.spec = OperatorSpec::kolmogorov(n);
      c.dim = 2 * n;
    } else if (c.preset == "custom") {
      if (!j.contains("Q") || !j.contains("B")) throw ConfigError("", "custom preset requires Q and B");
      const Mat q = detail::parse_matrix(j["Q"], "/Q");
      const Mat b = detail::parse_matrix(j["B"], "/B");
      if (q.rows() != b.rows()) throw ConfigError("/B", "must have the same size as Q");
      try {
        c.spec = OperatorSpec(q, b, "custom");
      } catch (const InputError& e) {
        throw ConfigError("/Q", e.what());
      }
      c.dim = c.spec.dim;
    } else {
      throw ConfigError("/preset", "unknown preset '" + c.preset + "'");
    }
  } catch (const InputError& e) {
    throw ConfigError("", e.what());
  }
  if (!hypoellipticity_check(c.spec).hypoelliptic) throw ConfigError("/B", "operator is not hypoelliptic");

  if (j.contains("quad")) {
    const auto& q = j["quad"];
    if (!q.is_object()) throw ConfigError("/quad", "must be an object");
    c.quad.gh_order = detail::get_or<int>(q, "gh_order", c.quad.gh_order, "/quad");
    c.quad.time_nodes = detail::get_or<int>(q, "time_nodes", c.quad.time_nodes, "/quad");
    c.quad.mc_samples = detail::get_or<std::uint64_t>(q, "mc_samples", c.quad.mc_samples, "/quad");
    c.quad.rng_seed = detail::get_or<std::uint64_t>(q, "rng_seed", c.quad.rng_seed, "/quad");
    try {
      c.quad.validate();
    } catch (const InputError& e) {
      throw ConfigError("/quad", e.what());
    }
  }
  if (j.contains("checks")) {
    c.checks_given = true;
    if (!j["checks"].is_array()) throw ConfigError("/checks", "must be an array");
    for (std::size_t i = 0; i < j["checks"].size(); ++i) {
      const auto& e = j["checks"][i];
      const std::string field = "/checks/" + std::to_string(i);
      CheckConfig cc;
      if (e.is_string()) {
        cc.name = e.get<std::string>();
      } else if (e.is_object()) {
        if (!e.contains("name")) throw ConfigError(field, "missing name");
        cc.name = detail::get_or<std::string>(e, "name", "", field);
        cc.count = detail::get_or<int>(e, "count", 0, field);
        if (cc.count < 0) throw ConfigError(field + "/count", "must be nonnegative");
        cc.params = e;
      } else {
        throw ConfigError(field, "must be a string or an object");
      }
      c.checks.push_back(std::move(cc));
    }
  }
  c.output_path = detail::get_or<std::string>(j, "output_path", c.output_path, "");
  if (const char* env = std::getenv("HYPOK_SEED")) {
    try {
      c.quad.rng_seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("HYPOK_SEED", "not an unsigned integer");
    }
  }
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("parse error: ") + e.what());
  }
  return config_from_json(j);
}

/// Collects rows for one check; every row records its parameters.
class RowSink {
 public:
  RowSink(VerificationReport& report, std::string check) : report_(report), check_(std::move(check)) {}

  void add(const InequalityCheck& c, ParamList extra = {}) {
    ReportRow r;
    r.check = check_;
    r.preset = report_.preset;
    r.params = std::move(extra);
    r.params.insert(r.params.end(), c.params.begin(), c.params.end());
    r.lhs = c.lhs;
    r.rhs = c.rhs;
    r.margin = c.margin;
    r.stderr_ = c.stderr_;
    r.tol = c.tol;
    r.pass = c.pass;
    report_.rows.push_back(std::move(r));
  }

  /// Residual row: passes when residual ≤ tolerance.
  void residual(double value, double tolerance, ParamList params) {
    InequalityCheck c;
    c.lhs = value;
    c.rhs = tolerance;
    c.margin = tolerance - value;
    c.pass = std::isfinite(value) && value <= tolerance;
    add(c, std::move(params));
  }

  void error(const std::string& what, ParamList params) {
    ReportRow r;
    r.check = check_;
    r.preset = report_.preset;
    r.params = std::move(params);
    r.error = what;
    r.lhs = r.rhs = r.margin = std::numeric_limits<double>::quiet_NaN();
    report_.rows.push_back(std::move(r));
  }

  /// Runs `fn`, turning any library error into a failed row.
  template <class Fn>
  void guarded(ParamList params, Fn&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      error(e.what(), std::move(params));
    }
  }

  VerificationReport& report() { return report_; }

 private:
  VerificationReport& report_;
  std::string check_;
};

struct CheckContext {
  const ScenarioConfig& config;
  const OperatorSpec& spec;
  const QuadratureSpec& quad;
  const CheckConfig& check;
  CounterRng rng;

  int count(int fallback) const { return check.count > 0 ? check.count : fallback; }
  double param(const char* key, double fallback) const {
    return check.params.contains(key) && check.params[key].is_number() ? check.params[key].get<double>() : fallback;
  }
  double uniform(std::uint64_t k, double lo, double hi) const { return lo + (hi - lo) * rng.uniform(k); }
  Vec point(std::uint64_t k, double half_width = 1.0) const {
    Vec x(spec.dim);
    for (int d = 0; d < spec.dim; ++d) x(d) = uniform(k + d, -half_width, half_width);
    return x;
  }
};

using CheckFn = std::function<void(CheckContext&, RowSink&)>;

struct CheckEntry {
  std::string module;
  CheckFn run;
};

namespace checks {

inline ParamList point_params(int i, double t) { return {{"i", static_cast<double>(i)}, {"t", t}}; }

inline void kernel_forms(CheckContext& c, RowSink& out) {
  for (int i = 0; i < c.count(50); ++i) {
    const double t = c.uniform(1000 * i, 0.05, 3.0);
    out.guarded(point_params(i, t), [&] {
      const auto k = heat_kernel(c.spec, c.point(1000 * i + 10), c.point(1000 * i + 20), t);
      out.residual(k.form_residual, 1e-11, point_params(i, t));
    });
  }
}

// ∫p(X,Y,t)dY from the kernel values at whitened nodes, so the prefactor is tested.
inline void kernel_normalization(CheckContext& c, RowSink& out) {
  int i = 0;
  for (double t : {0.3, 1.0, 3.0}) {
    out.guarded(point_params(i, t), [&] {
      const KernelAtTime k(c.spec, t);
      const Vec x = c.point(77 + i);
      const Vec mean = k.gramians().exp_tB * x;
      const Mat l = std::sqrt(4.0 * t) * k.sqrt_K();
      const double jac = l.determinant() * std::pow(kPi, 0.5 * c.spec.dim);
      double acc = 0.0;
      for_each_hermite_node(c.spec.dim, c.quad.gh_order, [&](const Vec& u, double w) {
        acc += w * jac * std::exp(k.log_value(x, mean + l * u) + u.squaredNorm());
      });
      out.residual(std::abs(acc - 1.0), 1e-10, point_params(i, t));
    });
    ++i;
  }
}

inline void chapman_kolmogorov(CheckContext& c, RowSink& out) {
  const int per = c.count(5);
  int i = 0;
  for (auto [s, t] : {std::pair{0.3, 0.7}, std::pair{1.0, 1.0}}) {
    for (int k = 0; k < per; ++k, ++i) {
      ParamList p{{"i", double(i)}, {"s", s}, {"t", t}};
      out.guarded(p, [&] {
        const Vec x = c.point(500 * i), y = c.point(500 * i + 10, 0.5);
        const KernelAtTime ks(c.spec, s), kt(c.spec, t), kst(c.spec, s + t);
        // The integrand is narrower than the s-kernel along the drift direction.
        const int order = c.spec.dim <= 2 ? std::max(c.quad.gh_order, 96) : c.quad.gh_order;
        const double conv = gh_expectation(ks, x, order, [&](const Vec& z) { return kt.value(z, y); });
        out.residual(std::abs(conv / kst.value(x, y) - 1.0), 1e-8, p);
      });
    }
  }
}

inline void gramian_identity(CheckContext& c, RowSink& out) {
  int i = 0;
  for (double t : {0.1, 1.0, 10.0}) {
    out.guarded(point_params(i, t), [&] {
      const auto g = gramians(c.spec, t, true);
      const Mat tk = t * g.K_t;
      const Mat alt = g.exp_tB * g.C_t * g.exp_tB.transpose();
      out.residual((tk - alt).norm() / tk.norm(), 1e-7, {{"i", double(i)}, {"t", t}, {"identity", 0}});
      out.residual(logdet_derivative_identity(c.spec, t).value(), 1e-7, {{"i", double(i)}, {"t", t}, {"identity", 1}});
    });
    ++i;
  }
}

inline void liyau_kernel(CheckContext& c, RowSink& out) {
  for (int i = 0; i < c.count(40); ++i) {
    const double t = c.uniform(1000 * i, 0.1, 3.0);
    out.guarded(point_params(i, t), [&] {
      const auto s = liyau_kernel_identity(c.spec, c.point(1000 * i + 10), c.point(1000 * i + 20), t);
      out.residual(std::abs(s.lhs - s.rhs), 1e-9 * (1.0 + std::abs(s.rhs)), point_params(i, t));
    });
  }
}

inline void ultracontractivity(CheckContext& c, RowSink& out) {
  RandomFunctionOptions opt;
  for (int i = 0; i < c.count(10); ++i) {
    const double t = c.uniform(1000 * i + 900, 0.1, 2.0);
    for (double p : {1.0, 2.0}) {
      ParamList pl{{"i", double(i)}, {"t", t}, {"p", p}, {"q", p}};
      out.guarded(pl, [&] {
        const auto f = random_test_function(c.spec.dim, c.rng, i, opt);
        const auto r = ultracontractivity_check(c.spec, f, p, p, t, c.quad);
        out.add(make_check("ultracontractivity", r.lhs, r.rhs), pl);
      });
    }
  }
}

inline void kernel_lr_scaling(CheckContext& c, RowSink& out) {
  for (double r : {1.5, 2.0, 3.0}) {
    out.guarded({{"r", r}}, [&] {
      const Vec y = c.point(31);
      auto scaled = [&](double t) {
        return kernel_lr_norm(c.spec, y, t, r, c.quad) * std::pow(volume(c.spec, t), 1.0 - 1.0 / r) *
               std::exp(t * c.spec.trace_B / r);
      };
      const double ref = scaled(1.0);
      for (double t : {0.2, 5.0}) out.residual(std::abs(scaled(t) / ref - 1.0), 1e-8, {{"r", r}, {"t", t}});
      out.report().calibration.push_back({"c_N_r(r=" + std::to_string(r) + ")", lr_norm_constant(c.spec.dim, r, c.quad)});
    });
  }
}

inline TestFunction frac_test_function(int dim) { return TestFunction::isotropic_gaussian(dim, 1.0); }

inline void fractional_poisson(CheckContext& c, RowSink& out) {
  const Vec x = c.point(5, 0.5);
  for (double s : {0.1, 0.25, 0.4}) {
    out.guarded({{"s", s}}, [&] {
      const auto f = frac_test_function(c.spec.dim);
      const double a = fractional_power(c.spec, f, s, x, c.quad);
      const double b = fractional_via_poisson(c.spec, f, s, x, c.quad);
      out.residual(std::abs(a - b) / std::max(1.0, std::abs(a)), 1e-4, {{"s", s}});
    });
  }
}

inline void fractional_riesz_oracle(CheckContext& c, RowSink& out) {
  if (c.spec.B.norm() != 0.0 || !c.spec.Q.isIdentity(0.0) || c.spec.dim > 3) {
    out.report().skipped.push_back("fractional_riesz_oracle: heat preset with N <= 3 only");
    return;
  }
  const Vec x = c.point(9, 0.5);
  for (double s : {0.25, 0.5, 0.75}) {
    out.guarded({{"s", s}}, [&] {
      const auto f = frac_test_function(c.spec.dim);
      const double a = fractional_power(c.spec, f, s, x, c.quad);
      const double b = classical_frac_laplacian_oracle(c.spec, f, s, x);
      out.residual(std::abs(a - b), 1e-5, {{"s", s}});
    });
  }
}

inline void fractional_inversion(CheckContext& c, RowSink& out) {
  if (c.spec.trace_B < 0.0) {
    out.report().skipped.push_back("fractional_inversion: Riesz potential needs trace(B) >= 0");
    return;
  }
  const double alpha = c.param("alpha", 0.5);
  const Vec x = c.point(13, 0.5);
  out.guarded({{"alpha", alpha}}, [&] {
    const auto f = frac_test_function(c.spec.dim);
    const double fx = f.eval(x);
    out.residual(std::abs(potential_of_fractional(c.spec, f, alpha, x, c.quad) - fx), 1e-4,
                 {{"alpha", alpha}, {"order", 0}});
    out.residual(std::abs(fractional_of_potential(c.spec, f, alpha, x, c.quad) - fx), 1e-4,
                 {{"alpha", alpha}, {"order", 1}});
  });
}

inline void perimeter(CheckContext& c, RowSink& out) {
  if (c.spec.dim > 2 || c.spec.trace_B < 0.0) {
    out.report().skipped.push_back("perimeter: N <= 2 and trace(B) >= 0 only");
    return;
  }
  const double s = c.param("s", 0.25);
  out.guarded({{"s", s}}, [&] {
    const BoxSet e(Vec::Zero(c.spec.dim), Vec::Constant(c.spec.dim, 1.0));
    IndicatorOptions o;
    o.seed = c.quad.rng_seed;
    const auto r = s_perimeter(c.spec, e, s, o);
    InequalityCheck ch;
    ch.lhs = std::abs(r.n2s_squared - r.n12s);
    ch.rhs = 3.0 * r.combined_stderr + 1e-3 * std::abs(r.n12s);
    ch.margin = ch.rhs - ch.lhs;
    ch.stderr_ = r.combined_stderr;
    ch.pass = r.consistent;
    ch.params = {{"n2s_squared", r.n2s_squared}, {"n12s", r.n12s}};
    out.add(ch, {{"s", s}});
  });
}

inline void perimeter_gagliardo(CheckContext& c, RowSink& out) {
  if (c.spec.B.norm() != 0.0 || !c.spec.Q.isIdentity(0.0) || c.spec.dim > 2) {
    out.report().skipped.push_back("perimeter_gagliardo: heat preset with N <= 2 only");
    return;
  }
  const double s = c.param("s", 0.25);
  out.guarded({{"s", s}}, [&] {
    const BoxSet e(Vec::Zero(c.spec.dim), Vec::Constant(c.spec.dim, 1.0));
    const double a = indicator_besov_l1(c.spec, e, s).value;
    const double b = heat_besov_factor(c.spec.dim, 1.0, 2.0 * s) * gagliardo_oracle(e, 1.0, 2.0 * s);
    out.residual(std::abs(a - b) / b, 0.02, {{"s", s}, {"besov", a}, {"gagliardo", b}});
  });
}

inline void besov_mapping(CheckContext& c, RowSink& out) {
  if (c.spec.trace_B < 0.0) {
    out.report().skipped.push_back("besov_mapping: trace(B) >= 0 only");
    return;
  }
  const auto f = TestFunction::isotropic_gaussian(c.spec.dim, 1.0);
  for (auto [p, alpha, s] : {std::tuple{2.0, 0.8, 0.25}, std::tuple{1.0, 0.5, 0.25}}) {
    ParamList pl{{"p", p}, {"alpha", alpha}, {"s", s}};
    out.guarded(pl, [&] {
      const auto m = besov_maps_to_lp_check(c.spec, f, p, alpha, s);
      out.add(make_check("besov_mapping", m.lhs_norm, m.bound), pl);
    });
  }
}

inline void gaussian_poincare(CheckContext& c, RowSink& out) {
  for (int i = 0; i < c.count(100); ++i) {
    const double t = c.uniform(1000 * i + 900, 0.05, 2.0);
    out.guarded(point_params(i, t), [&] {
      const auto f = random_test_function(c.spec.dim, c.rng, i);
      const Vec x = c.point(1000 * i + 910);
      const auto ch = gaussian_poincare_check(c.spec, f, t, x, c.quad);
      out.add(ch, point_params(i, t));
      const double var = semigroup_variance(c.spec, f, t, x, c.quad);
      InequalityCheck v;
      v.name = "variance_identity";
      v.lhs = std::abs(var - ch.lhs);
      v.rhs = 1e-9 * std::max(1.0, std::abs(var));
      v.margin = v.rhs - v.lhs;
      v.pass = v.lhs <= v.rhs;
      out.add(v, {{"i", double(i)}, {"t", t}, {"variance", 1}});
    });
  }
  for (int i = 0; i < 5; ++i) {
    const double t = c.uniform(7000 + i, 0.1, 2.0);
    ParamList pl{{"i", double(i)}, {"t", t}, {"linear", 1}};
    out.guarded(pl, [&] {
      const auto f = TestFunction::linear(c.point(7100 + 10 * i), 0.3);
      const auto ch = gaussian_poincare_check(c.spec, f, t, c.point(7300 + 10 * i), c.quad);
      out.residual(std::abs(ch.rhs - ch.lhs), 1e-9 * std::max(1.0, ch.rhs), pl);
    });
  }
}

inline void bakry_emery(CheckContext& c, RowSink& out) {
  for (int i = 0; i < c.count(20); ++i) {
    const double tau = c.uniform(1000 * i + 950, 0.05, 2.0);
    out.guarded(point_params(i, tau), [&] {
      const auto f = random_test_function(c.spec.dim, c.rng, i + 5000);
      out.add(bakry_emery_check(c.spec, f, tau, c.point(1000 * i + 960), c.quad), point_params(i, tau));
    });
  }
  ParamList pl{{"linear", 1}, {"tau", 0.7}};
  out.guarded(pl, [&] {
    const auto ch = bakry_emery_check(c.spec, TestFunction::linear(c.point(8100)), 0.7, c.point(8200), c.quad);
    out.residual(std::abs(ch.rhs - ch.lhs), 1e-9 * std::max(1.0, ch.rhs), pl);
  });
}

inline void local_poincare(CheckContext& c, RowSink& out) {
  const double r = c.param("r", 1.0);
  const Vec x = Vec::Zero(c.spec.dim);
  for (int i = 0; i < c.count(10); ++i) {
    ParamList pl{{"i", double(i)}};
    out.guarded(pl, [&] {
      const auto f = random_local_bump(c.spec, x, r, c.rng, i);
      out.add(local_poincare_check(c.spec, x, r, f, c.quad), pl);
    });
  }
}

inline void psi_monotonicity(CheckContext& c, RowSink& out) {
  const double t = c.param("t", 1.0);
  const int n_s = static_cast<int>(c.param("n_s", 9));
  out.guarded({{"t", t}}, [&] {
    const auto f = TestFunction::isotropic_gaussian(c.spec.dim, 1.0);
    const Vec x = c.point(17, 0.5);
    const auto p = psi_monotonicity_probe(c.spec, f, t, x, n_s, c.quad);
    auto& plot = out.report().plot;
    plot.push_back({"psi", 0.0, p.at_zero});
    for (std::size_t k = 0; k < p.s.size(); ++k) plot.push_back({"psi", p.s[k], p.psi[k]});
    plot.push_back({"psi", t, p.at_t});
    double worst = 0.0;
    double prev = p.at_zero;
    for (double v : p.psi) {
      worst = std::max(worst, prev - v);
      prev = v;
    }
    worst = std::max(worst, prev - p.at_t);
    out.residual(worst, 1e-9 * std::max(1.0, p.at_t), {{"t", t}, {"n_s", double(n_s)}});
  });
}

inline ExtensionDatum random_datum(const CheckContext& c, std::uint64_t k, bool z_bump) {
  RandomFunctionOptions opt;
  opt.nonnegative = true;
  return {random_test_function(c.spec.dim, c.rng, k, opt), z_bump ? ZProfile::bump(1.0, 0.8) : ZProfile::one()};
}

inline void liyau_extension(CheckContext& c, RowSink& out) {
  const int per = c.count(14);
  int i = 0;
  for (double a : {0.0, 0.5, 1.0, -0.5}) {
    for (int k = 0; k < per; ++k, ++i) {
      const std::uint64_t b = 1000 * i;
      const double t = c.uniform(b, 0.1, 2.0);
      const double z = a < 0.0 ? 0.0 : c.uniform(b + 1, 0.0, 2.0);
      const double zeta = c.uniform(b + 2, 0.0, 2.0);
      ParamList pl{{"i", double(i)}, {"z", z}, {"zeta", zeta}};
      out.guarded(pl, [&] {
        out.add(liyau_extension_check(c.spec, a, {c.point(b + 10), z, t}, {c.point(b + 20), zeta, 0.0}), pl);
      });
    }
  }
}

inline void liyau_extension_semigroup(CheckContext& c, RowSink& out) {
  const int per = c.count(4);
  int i = 0;
  for (double a : {0.0, 0.5, 1.0, -0.5}) {
    for (int k = 0; k < per; ++k, ++i) {
      const std::uint64_t b = 1000 * i + 500;
      const double t = c.uniform(b, 0.2, 2.0);
      const double z = a < 0.0 ? 0.0 : c.uniform(b + 1, 0.3, 1.8);
      ParamList pl{{"i", double(i)}, {"z_bump", double(k % 2)}};
      out.guarded(pl, [&] {
        const auto phi = random_datum(c, 9000 + i, k % 2 == 1);
        out.add(liyau_extension_semigroup_check(c.spec, a, phi, c.point(b + 10), z, t, c.quad), pl);
      });
    }
  }
}

inline void harnack(CheckContext& c, RowSink& out) {
  const double a = c.param("a", 0.5);
  for (int i = 0; i < c.count(50); ++i) {
    const std::uint64_t b = 1000 * i + 700;
    double s = c.uniform(b, 0.1, 3.0), t = c.uniform(b + 1, 0.1, 3.0);
    if (s > t) std::swap(s, t);
    if (t - s < 1e-3) t += 1e-2;
    ParamList pl{{"i", double(i)}};
    out.guarded(pl, [&] {
      const auto phi = random_datum(c, 11000 + i, true);
      const ExtensionPoint early{c.point(b + 10), c.uniform(b + 2, 0.5, 1.5), s};
      const ExtensionPoint late{c.point(b + 20), c.uniform(b + 3, 0.5, 1.5), t};
      out.add(harnack_check(c.spec, a, phi, early, late, c.quad), pl);
    });
  }
}

inline void harnack_sharpness(CheckContext& c, RowSink& out) {
  const double a = c.param("a", 0.5);
  out.guarded({{"a", a}}, [&] {
    const auto rows = harnack_sharpness_probe(c.spec, a, {0.5, 0.25, 0.1, 0.05, 0.02});
    bool increasing = true;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.report().plot.push_back({"harnack_sharpness", rows[k].eps, rows[k].R});
      if (k > 0) increasing = increasing && rows[k].R > rows[k - 1].R;
    }
    InequalityCheck ch = make_check("harnack_sharpness", 0.95, rows.back().R);
    ch.pass = ch.pass && increasing && rows.back().R <= 1.0 + 1e-12;
    out.add(ch, {{"a", a}, {"eps", rows.back().eps}});
  });
}

}  // namespace checks

inline const std::map<std::string, CheckEntry>& check_registry() {
  static const std::map<std::string, CheckEntry> r{
      {"kernel_forms", {"kernel", checks::kernel_forms}},
      {"kernel_normalization", {"kernel", checks::kernel_normalization}},
      {"chapman_kolmogorov", {"kernel", checks::chapman_kolmogorov}},
      {"gramian_identity", {"kernel", checks::gramian_identity}},
      {"liyau_kernel_identity", {"kernel", checks::liyau_kernel}},
      {"ultracontractivity", {"semigroup", checks::ultracontractivity}},
      {"kernel_lr_scaling", {"semigroup", checks::kernel_lr_scaling}},
      {"fractional_poisson", {"fractional", checks::fractional_poisson}},
      {"fractional_riesz_oracle", {"fractional", checks::fractional_riesz_oracle}},
      {"fractional_inversion", {"fractional", checks::fractional_inversion}},
      {"perimeter", {"besov", checks::perimeter}},
      {"perimeter_gagliardo", {"besov", checks::perimeter_gagliardo}},
      {"besov_mapping", {"besov", checks::besov_mapping}},
      {"gaussian_poincare", {"inequalities", checks::gaussian_poincare}},
      {"bakry_emery", {"inequalities", checks::bakry_emery}},
      {"local_poincare", {"inequalities", checks::local_poincare}},
      {"psi_monotonicity", {"inequalities", checks::psi_monotonicity}},
      {"liyau_extension", {"extension", checks::liyau_extension}},
      {"liyau_extension_semigroup", {"extension", checks::liyau_extension_semigroup}},
      {"harnack", {"extension", checks::harnack}},
      {"harnack_sharpness", {"extension", checks::harnack_sharpness}},
  };
  return r;
}

inline bool known_suite(const std::string& suite) {
  if (suite == "all") return true;
  for (const auto& [name, e] : check_registry())
    if (e.module == suite) return true;
  return false;
}

/// Runs the configured checks belonging to `suite` ("all" for every module).
/// Without a "checks" entry in the config every registered check of the suite runs.
inline VerificationReport run_verification(const ScenarioConfig& config, const std::string& suite = "all") {
  if (!known_suite(suite)) throw ConfigError("suite", "unknown suite '" + suite + "'");
  const auto& reg = check_registry();
  std::vector<CheckConfig> selected;
  if (config.checks_given) {
    for (const auto& c : config.checks) {
      const auto it = reg.find(c.name);
      if (it == reg.end()) throw ConfigError("/checks", "unknown check '" + c.name + "'");
      if (suite == "all" || it->second.module == suite) selected.push_back(c);
    }
  } else {
    for (const auto& [name, e] : reg)
      if (suite == "all" || e.module == suite) selected.push_back({name, 0, json::object()});
  }

  VerificationReport report;
  report.preset = config.preset;
  report.quad = config.quad;
  std::uint64_t stream = 0;
  for (const auto& cc : selected) {
    CheckContext ctx{config, config.spec, config.quad, cc, CounterRng(config.quad.rng_seed, 1000 + stream++)};
    RowSink sink(report, cc.name);
    sink.guarded({}, [&] { reg.at(cc.name).run(ctx, sink); });
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.check != b.check) return a.check < b.check;
    return a.params_json() < b.params_json();
  });
  for (const auto& r : report.rows) (r.pass ? report.passed : report.failed)++;
  return report;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string report_csv(const VerificationReport& report) {
  std::ostringstream os;
  os << "check_name,preset,params_json,lhs,rhs,margin,stderr,pass\n";
  for (const auto& r : report.rows) {
    os << r.check << ',' << r.preset << ',' << csv_quote(r.params_json()) << ',' << format_double(r.lhs) << ','
       << format_double(r.rhs) << ',' << format_double(r.margin) << ',' << format_double(r.stderr_) << ','
       << (r.pass ? "true" : "false") << '\n';
  }
  return os.str();
}

inline std::string plot_csv(const VerificationReport& report) {
  std::ostringstream os;
  os << "series,x,y\n";
  for (const auto& p : report.plot) os << p.series << ',' << format_double(p.x) << ',' << format_double(p.y) << '\n';
  return os.str();
}

inline std::string meta_json(const VerificationReport& report) {
  ordered_json j;
  j["preset"] = report.preset;
  j["rng_seed"] = report.quad.rng_seed;
  j["gh_order"] = report.quad.gh_order;
  j["time_nodes"] = report.quad.time_nodes;
  j["mc_samples"] = report.quad.mc_samples;
  j["passed"] = report.passed;
  j["failed"] = report.failed;
  ordered_json cal = ordered_json::object();
  for (const auto& [k, v] : report.calibration) cal[k] = v;
  j["calibration"] = cal;
  j["skipped"] = report.skipped;
  return j.dump(2) + "\n";
}

inline std::string sibling_path(const std::string& path, const std::string& suffix) {
  const auto dot = path.rfind('.');
  const auto slash = path.find_last_of('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? path.substr(0, dot) : path) + suffix;
}

/// Writes the report CSV, a plot-data CSV and a metadata JSON next to it.
inline void emit_report(const VerificationReport& report, const std::string& path) {
  auto write = [](const std::string& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("output_path", "cannot write '" + p + "'");
    out << text;
    if (!out) throw ConfigError("output_path", "write failed for '" + p + "'");
  };
  write(path, report_csv(report));
  write(sibling_path(path, "_plot.csv"), plot_csv(report));
  write(sibling_path(path, "_meta.json"), meta_json(report));
}

}  // namespace hypok::cli
