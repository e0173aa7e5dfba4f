#include "scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using hypok::Vec;
using hypok::cli::ConfigError;
using hypok::cli::json;
using hypok::cli::ordered_json;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct PresetOptions {
  std::string config;
  std::string preset = "heat";
  int dim = 1;
  int n = 1;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON scenario file supplying the operator");
    app->add_option("--preset", preset, "heat, kolmogorov or ornstein_uhlenbeck");
    app->add_option("--dim", dim, "dimension for heat and ornstein_uhlenbeck");
    app->add_option("--n", n, "block size for kolmogorov (dimension 2n)");
  }

  hypok::cli::ScenarioConfig resolve() const {
    if (!config.empty()) return hypok::cli::load_config(config);
    json j{{"preset", preset}, {"dim", dim}, {"n", n}};
    return hypok::cli::config_from_json(j);
  }
};

Vec to_vec(const std::vector<double>& v, int dim, const char* what) {
  if (static_cast<int>(v.size()) != dim)
    throw ConfigError(what, "expected " + std::to_string(dim) + " components");
  return Eigen::Map<const Vec>(v.data(), dim);
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

int run_verify(const std::string& suite, const std::string& config_path, const std::string& output) {
  auto cfg = hypok::cli::load_config(config_path);
  if (!output.empty()) cfg.output_path = output;
  const auto report = hypok::cli::run_verification(cfg, suite);
  hypok::cli::emit_report(report, cfg.output_path);
  std::cout << "suite " << suite << " on " << report.preset << ": " << report.passed << " passed, " << report.failed
            << " failed; report written to " << cfg.output_path << "\n";
  for (const auto& r : report.rows)
    if (!r.pass) std::cout << "  FAIL " << r.check << " " << r.params_json() << "\n";
  return report.failed == 0 ? kExitPass : kExitFail;
}

int run_report(const std::string& input) {
  std::ifstream in(input);
  if (!in) throw ConfigError("--input", "cannot open '" + input + "'");
  std::string line;
  std::getline(in, line);
  if (line != "check_name,preset,params_json,lhs,rhs,margin,stderr,pass")
    throw ConfigError("--input", "not a verification report");
  std::map<std::string, std::pair<int, int>> counts;
  int failed = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto name = line.substr(0, line.find(','));
    const bool pass = line.size() >= 4 && line.compare(line.size() - 4, 4, "true") == 0;
    (pass ? counts[name].first : counts[name].second)++;
    failed += pass ? 0 : 1;
  }
  for (const auto& [name, c] : counts)
    std::cout << name << ": " << c.first << " passed, " << c.second << " failed\n";
  return failed == 0 ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semigroup, fractional-power and Harnack verification for Kolmogorov operators"};
  app.require_subcommand(1);

  std::string suite = "all", config_path, output;
  auto* verify = app.add_subcommand("verify", "Run a verification suite and write the CSV report");
  verify->add_option("suite", suite, "all, kernel, semigroup, fractional, besov, inequalities or extension");
  verify->add_option("--config", config_path, "JSON scenario file")->required();
  verify->add_option("--output", output, "override the report path");

  PresetOptions kernel_opts;
  std::vector<double> kx, ky;
  double kt = 1.0;
  auto* kernel = app.add_subcommand("kernel", "Kernel evaluation");
  auto* kernel_eval = kernel->add_subcommand("eval", "Evaluate p(X, Y, t)");
  kernel->require_subcommand(1);
  kernel_opts.attach(kernel_eval);
  kernel_eval->add_option("--x", kx, "X components")->delimiter(',')->required();
  kernel_eval->add_option("--y", ky, "Y components")->delimiter(',')->required();
  kernel_eval->add_option("--t", kt, "time")->required();

  PresetOptions frac_opts;
  std::vector<double> fx;
  double fs = 0.5, fwidth = 1.0;
  auto* frac = app.add_subcommand("frac", "Fractional powers");
  auto* frac_apply = frac->add_subcommand("apply", "(-A)^s f(X) for f = exp(-|Y|^2 / width)");
  frac->require_subcommand(1);
  frac_opts.attach(frac_apply);
  frac_apply->add_option("--s", fs, "order in (0, 1)")->required();
  frac_apply->add_option("--x", fx, "X components")->delimiter(',')->required();
  frac_apply->add_option("--width", fwidth, "Gaussian width");

  PresetOptions besov_opts;
  std::vector<double> box_lo, box_hi;
  double bs = 0.25;
  auto* besov = app.add_subcommand("besov", "Besov seminorms of indicators");
  auto* perimeter = besov->add_subcommand("perimeter", "s-perimeter of a box by two independent routes");
  besov->require_subcommand(1);
  besov_opts.attach(perimeter);
  perimeter->add_option("--lo", box_lo, "lower corner")->delimiter(',')->required();
  perimeter->add_option("--hi", box_hi, "upper corner")->delimiter(',')->required();
  perimeter->add_option("--s", bs, "order in (0, 1/2)");

  PresetOptions harnack_opts;
  double ha = 0.5;
  int hn = 50;
  std::string harnack_out;
  auto* harnack = app.add_subcommand("harnack", "Sharp Harnack inequality");
  auto* scan = harnack->add_subcommand("scan", "Random-configuration Harnack scan plus the sharpness probe");
  harnack->require_subcommand(1);
  harnack_opts.attach(scan);
  scan->add_option("--a", ha, "Bessel parameter");
  scan->add_option("--count", hn, "number of random configurations");
  scan->add_option("--output", harnack_out, "report path");

  std::string report_in;
  auto* report = app.add_subcommand("report", "Summarize an existing report CSV");
  report->add_option("--input", report_in, "report CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*verify) return run_verify(suite, config_path, output);

    if (*kernel_eval) {
      const auto cfg = kernel_opts.resolve();
      const auto k = hypok::heat_kernel(cfg.spec, to_vec(kx, cfg.dim, "--x"), to_vec(ky, cfg.dim, "--y"), kt);
      ordered_json j{{"value", k.value}, {"m_t", k.m_t}, {"log_value", k.log_value}, {"form_residual", k.form_residual}};
      std::cout << j.dump(2) << "\n";
      return kExitPass;
    }

    if (*frac_apply) {
      const auto cfg = frac_opts.resolve();
      const auto f = hypok::TestFunction::isotropic_gaussian(cfg.dim, fwidth);
      const Vec x = to_vec(fx, cfg.dim, "--x");
      const auto r = hypok::fractional_power_detailed(cfg.spec, f, fs, x, cfg.quad);
      ordered_json j{{"s", fs}, {"x", vec_json(x)}, {"value", r.value}, {"tail_bound", r.tail_bound}};
      if (fs < 0.5) j["poisson"] = hypok::fractional_via_poisson(cfg.spec, f, fs, x, cfg.quad);
      std::cout << j.dump(2) << "\n";
      return kExitPass;
    }

    if (*perimeter) {
      const auto cfg = besov_opts.resolve();
      const hypok::BoxSet e(to_vec(box_lo, cfg.dim, "--lo"), to_vec(box_hi, cfg.dim, "--hi"));
      hypok::IndicatorOptions o;
      o.seed = cfg.quad.rng_seed;
      const auto r = hypok::s_perimeter(cfg.spec, e, bs, o);
      ordered_json j{{"s", bs},
                     {"value", r.value},
                     {"n1_2s", r.n12s},
                     {"n1_2s_stderr", r.n12s_stderr},
                     {"n2_s_squared", r.n2s_squared},
                     {"n2_s_squared_stderr", r.n2s_squared_stderr},
                     {"consistent", r.consistent}};
      std::cout << j.dump(2) << "\n";
      return r.consistent ? kExitPass : kExitFail;
    }

    if (*scan) {
      auto cfg = harnack_opts.resolve();
      cfg.checks_given = true;
      cfg.checks.clear();
      json params{{"a", ha}};
      cfg.checks.push_back({"harnack", hn, params});
      cfg.checks.push_back({"harnack_sharpness", 0, params});
      if (!harnack_out.empty()) cfg.output_path = harnack_out;
      const auto rep = hypok::cli::run_verification(cfg, "extension");
      if (!harnack_out.empty()) hypok::cli::emit_report(rep, cfg.output_path);
      std::cout << "harnack scan a=" << ha << ": " << rep.passed << " passed, " << rep.failed << " failed\n";
      for (const auto& p : rep.plot)
        if (p.series == "harnack_sharpness") std::cout << "  eps=" << p.x << " ratio/bound=" << p.y << "\n";
      return rep.failed == 0 ? kExitPass : kExitFail;
    }

    if (*report) return run_report(report_in);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
