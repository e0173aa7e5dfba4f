#include "scenario.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace hypok::cli {
namespace {

namespace fs = std::filesystem;

std::string config_error_field(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

class ScratchDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("hypok_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) const {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  int run(const std::string& args) const {
    const std::string cmd = std::string(HYPOK_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string output() const {
    std::ifstream in(dir_ / "stdout.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST(Config, Presets) {
  const auto heat = config_from_json(json{{"preset", "heat"}, {"dim", 2}});
  EXPECT_EQ(heat.dim, 2);
  EXPECT_TRUE(heat.spec.Q.isIdentity(0.0));
  EXPECT_TRUE(heat.spec.B.isZero(0.0));
  const auto kolmo = config_from_json(json{{"preset", "kolmogorov"}, {"n", 1}});
  EXPECT_EQ(kolmo.dim, 2);
  Mat q(2, 2), b(2, 2);
  q << 1, 0, 0, 0;
  b << 0, 0, 1, 0;
  EXPECT_EQ(kolmo.spec.Q, q);
  EXPECT_EQ(kolmo.spec.B, b);
  const auto custom = config_from_json(json::parse(R"({"preset":"custom","Q":[[1,0],[0,0]],"B":[[0,0],[1,0]]})"));
  EXPECT_EQ(custom.dim, 2);
  EXPECT_EQ(custom.spec.B, b);
}

TEST(Config, RejectsInvalidInputWithFieldPath) {
  EXPECT_EQ(config_error_field(json{{"preset", "custom"}, {"B", {{0.0}}}}), "");
  EXPECT_EQ(config_error_field(json::parse(R"({"preset":"custom","Q":[[1,0.5],[0,1]],"B":[[0,0],[0,0]]})")), "/Q");
  EXPECT_EQ(config_error_field(json::parse(R"({"preset":"custom","Q":[[1,0],[0,0]],"B":[[0,0],[0,0]]})")), "/B");
  EXPECT_EQ(config_error_field(json::parse(R"({"preset":"custom","Q":[[1,0],[0]],"B":[[0,0],[0,0]]})")), "/Q/1");
  EXPECT_EQ(config_error_field(json{{"preset", "elliptic"}}), "/preset");
  EXPECT_EQ(config_error_field(json{{"preset", "heat"}, {"dim", 9}}), "/dim");
  EXPECT_EQ(config_error_field(json{{"preset", "kolmogorov"}, {"n", "one"}}), "/n");
  EXPECT_EQ(config_error_field(json{{"quad", {{"gh_order", 0}}}}), "/quad");
  EXPECT_EQ(config_error_field(json{{"checks", {{{"count", 3}}}}}), "/checks/0");
  EXPECT_EQ(config_error_field(json::array()), "");
}

TEST(Config, SeedFromEnvironment) {
  const json j{{"quad", {{"rng_seed", 5}}}};
  EXPECT_EQ(config_from_json(j).quad.rng_seed, 5u);
  ::setenv("HYPOK_SEED", "123", 1);
  EXPECT_EQ(config_from_json(j).quad.rng_seed, 123u);
  ::setenv("HYPOK_SEED", "abc", 1);
  EXPECT_THROW(config_from_json(j), ConfigError);
  ::unsetenv("HYPOK_SEED");
}

TEST(Verification, EmptyCheckListGivesEmptyReport) {
  const auto rep = run_verification(config_from_json(json{{"checks", json::array()}}));
  EXPECT_TRUE(rep.rows.empty());
  EXPECT_EQ(rep.failed, 0);
  EXPECT_EQ(report_csv(rep), "check_name,preset,params_json,lhs,rhs,margin,stderr,pass\n");
}

TEST(Verification, UnknownNamesAreConfigErrors) {
  EXPECT_THROW(run_verification(config_from_json(json{{"checks", {"no_such_check"}}})), ConfigError);
  EXPECT_THROW(run_verification(config_from_json(json::object()), "geometry"), ConfigError);
}

TEST(Verification, SuiteFilterSelectsModule) {
  const auto cfg = config_from_json(json{{"checks", {"gramian_identity", "kernel_lr_scaling"}}});
  const auto rep = run_verification(cfg, "kernel");
  ASSERT_FALSE(rep.rows.empty());
  for (const auto& r : rep.rows) EXPECT_EQ(r.check, "gramian_identity");
}

TEST(Verification, ModuleErrorsBecomeFailedRows) {
  const auto cfg = config_from_json(json::parse(R"({"checks":[{"name":"perimeter","s":0.7},"gramian_identity"]})"));
  const auto rep = run_verification(cfg);
  int errors = 0;
  for (const auto& r : rep.rows) {
    if (r.check == "perimeter") {
      EXPECT_FALSE(r.pass);
      EXPECT_NE(r.params_json().find("error"), std::string::npos);
      ++errors;
    } else {
      EXPECT_TRUE(r.pass);
    }
  }
  EXPECT_EQ(errors, 1);
  EXPECT_EQ(rep.failed, 1);
}

TEST(Verification, PassFlagMatchesTolerance) {
  const auto rep = run_verification(config_from_json(json{{"preset", "kolmogorov"}, {"checks", {"liyau_extension"}}}));
  ASSERT_FALSE(rep.rows.empty());
  for (const auto& r : rep.rows) EXPECT_EQ(r.pass, r.lhs <= r.rhs + r.tol) << r.params_json();
}

TEST(Report, CsvQuotingAndRows) {
  VerificationReport rep;
  rep.preset = "heat";
  ReportRow r;
  r.check = "demo";
  r.preset = "heat";
  r.params = {{"t", 0.5}};
  r.error = "bad \"value\"";
  r.lhs = 1.0;
  r.rhs = 2.0;
  r.margin = 1.0;
  r.pass = true;
  rep.rows.push_back(r);
  EXPECT_EQ(report_csv(rep),
            "check_name,preset,params_json,lhs,rhs,margin,stderr,pass\n"
            "demo,heat,\"{\"\"t\"\":0.5,\"\"error\"\":\"\"bad \\\"\"value\\\"\"\"\"}\",1,2,1,0,true\n");
}

TEST(Report, DeterministicAcrossRuns) {
  const auto cfg = config_from_json(
      json{{"preset", "kolmogorov"}, {"checks", {"kernel_forms", "local_poincare", "harnack", "gaussian_poincare"}}});
  EXPECT_EQ(report_csv(run_verification(cfg)), report_csv(run_verification(cfg)));
}

TEST(Report, SharpnessSeriesIsMonotone) {
  const auto rep = run_verification(config_from_json(json{{"checks", {"harnack_sharpness"}}}));
  std::vector<double> r;
  for (const auto& p : rep.plot)
    if (p.series == "harnack_sharpness") r.push_back(p.y);
  ASSERT_EQ(r.size(), 5u);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GT(r[i], r[i - 1]);
  EXPECT_EQ(rep.failed, 0);
}

TEST_F(ScratchDir, ExitCodes) {
  const auto ok = write("ok.json", R"({"preset":"heat","dim":1,"checks":["gramian_identity"],"output_path":")" +
                                       (dir_ / "ok.csv").string() + "\"}");
  EXPECT_EQ(run("verify all --config " + ok), 0) << output();
  EXPECT_TRUE(fs::exists(dir_ / "ok.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "ok_plot.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "ok_meta.json"));
  EXPECT_EQ(run("report --input " + (dir_ / "ok.csv").string()), 0) << output();

  const auto bad_row = write("fail.json", R"({"checks":[{"name":"perimeter","s":0.7}]})");
  EXPECT_EQ(run("verify all --config " + bad_row + " --output " + (dir_ / "fail.csv").string()), 1) << output();
  EXPECT_EQ(run("report --input " + (dir_ / "fail.csv").string()), 1) << output();

  const auto bad_cfg = write("bad.json", R"({"preset":"custom","Q":[[1,2],[0,1]],"B":[[0,0],[0,0]]})");
  EXPECT_EQ(run("verify all --config " + bad_cfg), 2);
  EXPECT_NE(output().find("/Q"), std::string::npos) << output();
  EXPECT_EQ(run("verify all --config " + (dir_ / "missing.json").string()), 2);
  EXPECT_EQ(run("verify all --config " + write("broken.json", "{")), 2);
  EXPECT_EQ(run("verify all --config " + ok + " --output " + (dir_ / "no" / "such" / "dir.csv").string()), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST_F(ScratchDir, KernelAndFractionalVerbs) {
  ASSERT_EQ(run("kernel eval --preset heat --dim 1 --x 0 --y 0 --t 1"), 0) << output();
  const auto k = json::parse(output());
  EXPECT_NEAR(k["value"].get<double>(), 1.0 / std::sqrt(4.0 * kPi), 1e-15);
  EXPECT_EQ(run("kernel eval --preset kolmogorov --n 1 --x 0 --y 0,0 --t 1"), 2);

  ASSERT_EQ(run("frac apply --preset heat --dim 1 --s 0.5 --x 0"), 0) << output();
  const auto f = json::parse(output());
  EXPECT_NEAR(f["value"].get<double>(), 1.1283791670955126, 1e-6);
}

}  // namespace
}  // namespace hypok::cli
