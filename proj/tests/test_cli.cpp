#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sysid/cli.hpp"
#include "sysid/error.hpp"

using namespace sysid;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run_command(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sysid_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name, std::ios::binary) << text;
    return (dir_ / name).string();
  }

  fs::path dir_;
};

}  // namespace

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(cli::exit_code_for(InvalidArgument("x")), 1);
  EXPECT_EQ(cli::exit_code_for(RegimeError("x")), 2);
  EXPECT_EQ(cli::exit_code_for(NumericError("x")), 2);
  EXPECT_EQ(cli::exit_code_for(IoError("x")), 3);
}

TEST_F(CliTest, HelpExitsZero) {
  const CliRun r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("experiment"), std::string::npos);
}

TEST_F(CliTest, UnknownSubcommandIsUsageError) {
  const CliRun r = run({"frobnicate"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
}

TEST_F(CliTest, MissingSubcommandIsUsageError) { EXPECT_EQ(run({}).code, 1); }

TEST_F(CliTest, BadConfigIsUsageError) {
  const std::string cfg = write("bad.toml", "delta = 2.0\n[system]\nA = [[0.5]]\n");
  const CliRun r = run({"--config", cfg, "--out", (dir_ / "o").string(), "bounds", "--T", "100"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("delta"), std::string::npos) << r.err;
}

TEST_F(CliTest, IrregularBoundsExitTwo) {
  const std::string cfg = write("irr.toml", "[system]\nA = [[1.1, 0.0], [0.0, 1.1]]\n");
  const CliRun r = run({"--config", cfg, "--out", (dir_ / "o").string(), "bounds", "--T", "1000"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("inconsistent"), std::string::npos) << r.err;
}

TEST_F(CliTest, BoundsWritesTable) {
  const std::string cfg = write("s.toml", "[system]\nA = [[1.5]]\n");
  const CliRun r = run({"--config", cfg, "--out", (dir_ / "o").string(), "--quiet", "bounds", "--T", "200"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const nlohmann::json s = nlohmann::json::parse(slurp(dir_ / "o" / "summary.json"));
  EXPECT_EQ(s["results"]["rate"], "rho^-T");
  EXPECT_EQ(s["results"]["minimax_lower_bound"]["branch"], 2);
}

TEST_F(CliTest, SimulateEstimateVerify) {
  const std::string cfg = write("s.toml", "seed = 5\n[system]\nA = [[0.5, 0.2], [0.0, 0.3]]\n");
  const std::string before = slurp(cfg);
  const fs::path sim = dir_ / "sim";
  ASSERT_EQ(run({"--config", cfg, "--out", sim.string(), "simulate", "--T", "300"}).code, 0);
  EXPECT_TRUE(fs::exists(sim / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(sim / "noise.csv"));
  const std::string traj = (sim / "trajectory.csv").string();
  const std::string traj_before = slurp(traj);
  const fs::path est = dir_ / "est";
  const CliRun e = run({"--config", cfg, "--out", est.string(), "estimate", "--trajectory", traj});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_TRUE(fs::exists(est / "a_hat.csv"));
  const nlohmann::json s = nlohmann::json::parse(slurp(est / "summary.json"));
  EXPECT_LT(s["results"]["error_opnorm"].get<double>(), 0.3);
  EXPECT_EQ(run({"--out", est.string(), "verify"}).code, 0);
  EXPECT_EQ(run({"--out", sim.string(), "verify"}).code, 0);
  EXPECT_EQ(slurp(cfg), before);
  EXPECT_EQ(slurp(traj), traj_before);
}

TEST_F(CliTest, VerifyFailsOnTamper) {
  const std::string cfg = write("s.toml", "seed = 5\ntrials = 4\nT_grid = [50, 100]\n[system]\nA = [[0.5]]\n");
  const fs::path out = dir_ / "o";
  ASSERT_EQ(run({"--config", cfg, "--out", out.string(), "--quiet", "experiment", "rate"}).code, 0);
  std::ofstream(out / "plot.dat", std::ios::app) << "1 1\n";
  const CliRun r = run({"--out", out.string(), "verify"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("plot.dat"), std::string::npos) << r.err;
}

TEST_F(CliTest, OverridesReachSummary) {
  const std::string cfg = write("s.toml", "seed = 5\ntrials = 4\nT_grid = [50, 100]\n[system]\nA = [[0.5]]\n");
  const fs::path out = dir_ / "o";
  ASSERT_EQ(run({"--config", cfg, "--out", out.string(), "--seed", "77", "--trials", "3", "--delta", "0.2",
                 "experiment", "rate"})
                .code,
            0);
  const nlohmann::json s = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(s["seed"], 77);
  EXPECT_EQ(s["config"]["trials"], 3);
  EXPECT_EQ(s["config"]["delta"], 0.2);
  EXPECT_EQ(run({"--config", cfg, "--trials", "0", "--out", out.string(), "experiment", "rate"}).code, 1);
}

TEST_F(CliTest, UnknownExperimentKind) {
  EXPECT_EQ(run({"--out", dir_.string(), "experiment", "weather"}).code, 1);
}

TEST_F(CliTest, InconsistencySummaryHasModes) {
  const fs::path out = dir_ / "o";
  const CliRun r = run({"--out", out.string(), "--trials", "200", "--quiet", "experiment", "inconsistency"});
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json s = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_TRUE(s["results"].contains("modes"));
  EXPECT_TRUE(s["results"]["modes"].is_array());
}

TEST_F(CliTest, BinaryExitCodes) {
  const char* exe = std::getenv("SYSID_CLI");
  if (exe == nullptr) GTEST_SKIP() << "SYSID_CLI not set";
  auto status = [&](const std::string& args) {
    const int s = std::system((std::string(exe) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("frobnicate"), 1);
  const std::string cfg = write("irr.toml", "[system]\nA = [[1.1, 0.0], [0.0, 1.1]]\n");
  EXPECT_EQ(status("--config " + cfg + " --out " + (dir_ / "o").string() + " bounds --T 1000"), 2);
  EXPECT_EQ(status("--out " + (dir_ / "none").string() + " verify"), 3);
}
