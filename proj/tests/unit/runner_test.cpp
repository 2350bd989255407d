#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gapscan/error.hpp"
#include "gapscan/runner.hpp"

namespace fs = std::filesystem;
using gapscan::RunConfig;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> summary_of(const fs::path& p) {
  std::ifstream f(p);
  return gapscan::parse_key_values(f);
}

class RunnerFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gapscan_runner_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunConfig oracle_config(const std::string& tag) const {
    RunConfig c;
    c.model = "oracle-random";
    c.seed = 3;
    c.oracle_dim = 8;
    c.trace_csv = (dir_ / (tag + "_trace.csv")).string();
    c.derivative_csv = (dir_ / (tag + "_deriv.csv")).string();
    c.summary = (dir_ / (tag + "_summary.txt")).string();
    return c;
  }

  fs::path dir_;
};

}  // namespace

TEST(Runner, ParsesKeyValueLines) {
  std::istringstream in("# comment\nmodel = tfim3d\n\n  J=0.1   # trailing\nsummary = a b.txt\n");
  const auto kv = gapscan::parse_key_values(in);
  ASSERT_EQ(kv.size(), 3u);
  EXPECT_EQ(kv.at("model"), "tfim3d");
  EXPECT_EQ(kv.at("J"), "0.1");
  EXPECT_EQ(kv.at("summary"), "a b.txt");

  std::istringstream bad("model tfim2d\n");
  EXPECT_THROW(gapscan::parse_key_values(bad), gapscan::InputError);
  std::istringstream empty_key(" = 3\n");
  EXPECT_THROW(gapscan::parse_key_values(empty_key), gapscan::InputError);
  EXPECT_THROW(gapscan::read_config_file("/nonexistent/gapscan.cfg"), gapscan::InputError);
}

TEST(Runner, ApplySettingsRejectsUnknownsAndBadNumbers) {
  RunConfig c;
  gapscan::apply_settings(c, {{"J", "0.25"}, {"D", "5"}, {"scheme", "gates"}, {"seed", "9"}});
  EXPECT_DOUBLE_EQ(*c.J, 0.25);
  EXPECT_EQ(*c.D, 5u);
  EXPECT_EQ(*c.scheme, "gates");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_THROW(gapscan::apply_settings(c, {{"bond", "3"}}), gapscan::InputError);
  EXPECT_THROW(gapscan::apply_settings(c, {{"J", "0.1x"}}), gapscan::InputError);
  EXPECT_THROW(gapscan::apply_settings(c, {{"J", "nan"}}), gapscan::InputError);
  EXPECT_THROW(gapscan::apply_settings(c, {{"D", "-2"}}), gapscan::InputError);
  EXPECT_THROW(gapscan::apply_settings(c, {{"D", "2.5"}}), gapscan::InputError);
}

TEST(Runner, ResolveFillsModelDefaults) {
  RunConfig c;
  const RunConfig mpo = gapscan::resolve(c);
  EXPECT_EQ(*mpo.scheme, "mpo");
  EXPECT_EQ(*mpo.D, 8u);
  EXPECT_DOUBLE_EQ(*mpo.dtau, 0.2);
  EXPECT_EQ(*mpo.smoothing, 1u);

  c.scheme = "gates";
  const RunConfig gates = gapscan::resolve(c);
  EXPECT_EQ(*gates.D, 3u);
  EXPECT_EQ(*gates.smoothing, gates.so_every);

  c = RunConfig{};
  c.model = "tfim3d";
  EXPECT_DOUBLE_EQ(*gapscan::resolve(c).J, 0.1);
  EXPECT_EQ(*gapscan::resolve(c).D, 3u);
  c.model = "haldane";
  const RunConfig h = gapscan::resolve(c);
  EXPECT_EQ(*h.scheme, "tebd");
  EXPECT_EQ(*h.D, 32u);
  EXPECT_DOUBLE_EQ(*h.tau_max, 70.0);
}

TEST(Runner, ResolveRejectsInvalidCombinations) {
  auto bad = [](auto mutate) {
    RunConfig c;
    mutate(c);
    EXPECT_THROW(gapscan::resolve(c), gapscan::InputError);
  };
  bad([](RunConfig& c) { c.model = "heisenberg"; });
  bad([](RunConfig& c) { c.scheme = "tebd"; });
  bad([](RunConfig& c) { c.model = "tfim1d", c.scheme = "mpo"; });
  bad([](RunConfig& c) { c.model = "oracle-random", c.oracle_dim = 2; });
  bad([](RunConfig& c) { c.D = 0; });
  bad([](RunConfig& c) { c.dtau = 0.0; });
  bad([](RunConfig& c) { c.dtau = 0.5, c.tau_max = 0.1; });
  bad([](RunConfig& c) { c.measure_every = 0; });
  bad([](RunConfig& c) { c.so_tol = 0.0; });
  bad([](RunConfig& c) { c.min_points = 1; });
  bad([](RunConfig& c) { c.window_rel_tol = -1.0; });
}

TEST(Runner, DescribeEchoesResolvedDefaults) {
  for (const std::string model : {"tfim2d", "tfim3d", "tfim1d", "haldane", "oracle-random"}) {
    RunConfig c;
    c.model = model;
    const auto d = gapscan::describe(gapscan::resolve(c));
    for (const char* key : {"model", "scheme", "D", "dtau", "tau_max", "seed", "window_rel_tol", "min_points",
                            "smoothing", "measure_every"}) {
      if (model == "oracle-random" && (std::string(key) == "D" || std::string(key) == "dtau" ||
                                       std::string(key) == "tau_max")) {
        continue;  // set from the spectrum at execution time
      }
      EXPECT_TRUE(d.count(key)) << model << " misses " << key;
    }
    EXPECT_EQ(d.count("so_tol"), model == "tfim2d" || model == "tfim3d" ? 1u : 0u) << model;
  }
}

TEST_F(RunnerFiles, OracleRunWritesAllOutputs) {
  const RunConfig c = oracle_config("a");
  std::ostringstream log;
  ASSERT_EQ(gapscan::run(c, log), gapscan::kExitOk) << log.str();
  EXPECT_NE(log.str().find("quality=clean"), std::string::npos) << log.str();
  const std::string trace = slurp(c.trace_csv);
  EXPECT_EQ(trace.rfind("tau,C\n", 0), 0u);
  EXPECT_EQ(slurp(c.derivative_csv).rfind("tau,dCdtau\n", 0), 0u);
  const auto s = summary_of(c.summary);
  ASSERT_TRUE(s.count("gap") && s.count("reference_gap"));
  const double gap = std::stod(s.at("gap")), ref = std::stod(s.at("reference_gap"));
  EXPECT_NEAR(gap, ref, 5e-3 * ref);
  EXPECT_EQ(s.at("model"), "oracle-random");
  EXPECT_EQ(s.at("run.overlap"), "first-gap");
  EXPECT_TRUE(s.count("tau_max") && s.count("dtau"));

  // Same seed, same bytes.
  const RunConfig again = oracle_config("b");
  ASSERT_EQ(gapscan::run(again, log), gapscan::kExitOk);
  EXPECT_EQ(slurp(again.trace_csv), trace);
  EXPECT_EQ(slurp(again.derivative_csv), slurp(c.derivative_csv));
}

TEST_F(RunnerFiles, ExitCodes) {
  std::ostringstream log;
  RunConfig c = oracle_config("e");
  c.J = 0.1;
  c.window_rel_tol = 0.0;
  EXPECT_EQ(gapscan::run(c, log), gapscan::kExitUsage);
  EXPECT_NE(log.str().find("usage error"), std::string::npos);

  c = oracle_config("e");
  c.summary = (dir_ / "missing" / "s.txt").string();
  EXPECT_EQ(gapscan::run(c, log), gapscan::kExitUsage);

  // A trace too short to hold a window of min_points samples.
  c = oracle_config("e");
  c.min_points = 500;
  EXPECT_EQ(gapscan::run(c, log), gapscan::kExitNoWindow);
}

TEST_F(RunnerFiles, SweepWritesOneRowPerPoint) {
  std::ostringstream log;
  const RunConfig c = oracle_config("s");
  EXPECT_EQ(gapscan::sweep(c, "seed", {}, "", log), gapscan::kExitUsage);
  EXPECT_EQ(gapscan::sweep(c, "model", {1.0}, "", log), gapscan::kExitUsage);
  EXPECT_EQ(gapscan::sweep(c, "seed", {1.5}, "", log), gapscan::kExitUsage);
  EXPECT_EQ(gapscan::sweep(c, "dtau", {-0.1}, "", log), gapscan::kExitUsage);

  const fs::path out = dir_ / "sweep.csv";
  ASSERT_EQ(gapscan::sweep(c, "seed", {3, 4}, out.string(), log), gapscan::kExitOk) << log.str();
  std::istringstream rows(slurp(out));
  std::string header, first, second;
  std::getline(rows, header);
  std::getline(rows, first);
  std::getline(rows, second);
  EXPECT_EQ(header, "param,gap,err,quality");
  EXPECT_EQ(first.rfind("3,", 0), 0u);
  EXPECT_EQ(second.rfind("4,", 0), 0u);
  EXPECT_TRUE(fs::exists(dir_ / "s_trace_0.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "s_summary_1.txt"));

  // A one-point sweep is the plain run.
  const RunConfig single = oracle_config("single");
  ASSERT_EQ(gapscan::run(single, log), gapscan::kExitOk);
  EXPECT_EQ(slurp(dir_ / "s_trace_0.csv"), slurp(single.trace_csv));
  EXPECT_EQ(summary_of(dir_ / "s_summary_0.txt").at("gap"), summary_of(single.summary).at("gap"));
}
