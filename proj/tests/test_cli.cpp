#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "crn/cli_app.hpp"
#include "test_util.hpp"

using namespace crn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("crn_test_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run_cli(std::initializer_list<std::string> args) {
  std::vector<std::string> storage = {"crn"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const std::string& a : storage) argv.push_back(a.c_str());
  return cli::run_command(static_cast<int>(argv.size()), argv.data());
}

std::string write_toy(const fs::path& dir) {
  Scenario s = testutil::toy_scenario(0.4, 0.5);
  s.solver.dual_iters = 25;
  s.solver.averaging_window = 10;
  s.solver.recovery_dual_iters = 25;
  const std::string path = (dir / "toy.json").string();
  save_scenario(s, path);
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST(Cli, ValidateAcceptsGoodScenario) {
  TempDir dir("validate");
  const std::string path = write_toy(dir.path);
  EXPECT_EQ(run_cli({"validate", "--scenario", path}), 0);
}

TEST(Cli, ValidateRejectsBrokenScenario) {
  TempDir dir("validate_bad");
  std::ofstream(dir.path / "bad.json") << "{\"seed\": 1}";
  EXPECT_EQ(run_cli({"validate", "--scenario", (dir.path / "bad.json").string()}), 1);
  EXPECT_EQ(run_cli({"validate", "--scenario", (dir.path / "missing.json").string()}), 1);
}

TEST(Cli, UsageErrorsExitTwo) {
  TempDir dir("usage");
  const std::string path = write_toy(dir.path);
  EXPECT_EQ(run_cli({"run", "--scenario", path, "--iters", "-5"}), 2);
  EXPECT_EQ(run_cli({"run", "--scenario", path, "--no-such-flag"}), 2);
  EXPECT_EQ(run_cli({"frobnicate"}), 2);
}

TEST(Cli, RunEmitsTraceCsvsWithExactHeaders) {
  TempDir dir("run");
  const std::string path = write_toy(dir.path);
  const std::string out = (dir.path / "out").string();
  ASSERT_EQ(run_cli({"run", "--scenario", path, "--iters", "10", "--out", out}), 0);
  EXPECT_EQ(first_line(fs::path(out) / "trace_links.csv"), "iter,link_id,price,subgrad,W,capacity,load");
  EXPECT_EQ(first_line(fs::path(out) / "trace_summary.csv"), "iter,utility,total_power,max_pu_violation");
  // ten iterations, one link
  std::ifstream in(fs::path(out) / "trace_summary.csv");
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 10);
}

TEST(Cli, RecoverEmitsSolutionArtifacts) {
  TempDir dir("recover");
  const std::string path = write_toy(dir.path);
  const std::string out = (dir.path / "out").string();
  ASSERT_EQ(run_cli({"recover", "--scenario", path, "--seed", "1", "--out", out}), 0);
  EXPECT_EQ(first_line(fs::path(out) / "solution_links.csv"), "link_id,W,trace_Q,price");
  EXPECT_EQ(first_line(fs::path(out) / "solution_sessions.csv"), "session_id,e_f");
  EXPECT_EQ(first_line(fs::path(out) / "solution_flows.csv"), "session_id,link_id,x");
  EXPECT_EQ(first_line(fs::path(out) / "solution_feasibility.csv"), "constraint,violation,worst_entity");
  const std::string feas = slurp(fs::path(out) / "solution_feasibility.csv");
  EXPECT_NE(feas.find("feasible,1"), std::string::npos);
}

TEST(Cli, ByteIdenticalReruns) {
  TempDir dir("determinism");
  const std::string path = write_toy(dir.path);
  const std::string out1 = (dir.path / "o1").string();
  const std::string out2 = (dir.path / "o2").string();
  const std::string out4 = (dir.path / "o4").string();
  ASSERT_EQ(run_cli({"recover", "--scenario", path, "--seed", "2", "--out", out1}), 0);
  ASSERT_EQ(run_cli({"recover", "--scenario", path, "--seed", "2", "--out", out2}), 0);
  ASSERT_EQ(run_cli({"recover", "--scenario", path, "--seed", "2", "--threads", "4", "--out", out4}), 0);
  for (const char* name : {"trace_links.csv", "trace_summary.csv", "solution_links.csv",
                           "solution_sessions.csv", "solution_flows.csv", "solution_feasibility.csv"}) {
    EXPECT_EQ(slurp(fs::path(out1) / name), slurp(fs::path(out2) / name)) << name;
    EXPECT_EQ(slurp(fs::path(out1) / name), slurp(fs::path(out4) / name)) << name;
  }
}

TEST(Cli, SweepEmitsTable) {
  TempDir dir("sweep");
  const std::string path = write_toy(dir.path);
  const std::string out = (dir.path / "out").string();
  ASSERT_EQ(run_cli({"sweep", "--scenario", path, "--alpha", "1.0", "--t-weight", "0", "--seed", "3",
                     "--out", out}),
            0);
  EXPECT_EQ(first_line(fs::path(out) / "sweep.csv"), "alpha,t,seed,utility,power,violation,runtime_s");
  std::ifstream in(fs::path(out) / "sweep.csv");
  std::string header, row;
  std::getline(in, header);
  ASSERT_TRUE(static_cast<bool>(std::getline(in, row)));
  EXPECT_EQ(row.rfind("1,0,3,", 0), 0u);
}

TEST(Cli, BaselineEmitsBothSolutions) {
  TempDir dir("baseline");
  const std::string path = write_toy(dir.path);
  const std::string out = (dir.path / "out").string();
  ASSERT_EQ(run_cli({"baseline", "--scenario", path, "--restarts", "2", "--out", out}), 0);
  EXPECT_TRUE(fs::exists(fs::path(out) / "equal_links.csv"));
  EXPECT_TRUE(fs::exists(fs::path(out) / "centralized_links.csv"));
  const std::string eq = slurp(fs::path(out) / "equal_feasibility.csv");
  const std::string ce = slurp(fs::path(out) / "centralized_feasibility.csv");
  EXPECT_NE(eq.find("feasible,1"), std::string::npos);
  EXPECT_NE(ce.find("feasible,1"), std::string::npos);
}
