#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sysid/config.hpp"
#include "sysid/error.hpp"
#include "sysid/outputs.hpp"
#include "sysid/runner.hpp"

using namespace sysid;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Config small_rate_config() {
  return parse_config_text("seed = 11\ntrials = 8\nT_grid = [50, 100, 200]\n[system]\nA = [[0.6, 0.1], [0.0, 0.4]]\n",
                           ConfigFormat::toml, "test.toml");
}

class OutputsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sysid_outputs_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST(RawCsv, HeaderIsFixed) {
  const std::string csv = raw_csv({});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "T,trial,error,lambda_min_YT,selfnorm");
}

TEST(RawCsv, RoundTripKeepsNaN) {
  const std::vector<TrialRecord> rows{{100, 0, 0.25, 3.5, kNaN}, {200, 7, 1e-300, kNaN, 0.125}};
  const std::vector<TrialRecord> back = parse_raw_csv(raw_csv(rows));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].T, 200);
  EXPECT_EQ(back[1].trial, 7);
  EXPECT_EQ(back[1].error, 1e-300);
  EXPECT_TRUE(std::isnan(back[0].selfnorm));
  EXPECT_TRUE(std::isnan(back[1].lambda_min_yt));
  EXPECT_EQ(back[0].lambda_min_yt, 3.5);
}

TEST(RawCsv, BadHeaderRejected) {
  EXPECT_ANY_THROW(parse_raw_csv("T,trial,error\n1,2,3\n"));
}

TEST(Json, NonFiniteBecomesNull) {
  RateFit f;
  f.slope = kNaN;
  EXPECT_TRUE(to_json(f)["slope"].is_null());
}

TEST_F(OutputsTest, SummaryHasSchemaAndProvenance) {
  const Config cfg = small_rate_config();
  write_outputs(dir_, cfg, run_experiment("rate", cfg));
  const nlohmann::json s = nlohmann::json::parse(slurp(dir_ / "summary.json"));
  EXPECT_EQ(s["schema_version"], kSchemaVersion);
  EXPECT_EQ(s["kind"], "rate");
  EXPECT_EQ(s["seed"], 11);
  EXPECT_EQ(s["config_hash"], hex64(config_hash(cfg)));
  EXPECT_TRUE(s["artifacts"].contains("raw.csv"));
  EXPECT_TRUE(s["results"].contains("fit"));
  for (const char* f : {"raw.csv", "plot.gp", "plot.dat", "plot.svg"}) EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  const std::string stamp = provenance_stamp(cfg);
  for (const char* f : {"plot.gp", "plot.dat", "plot.svg"}) {
    EXPECT_NE(slurp(dir_ / f).find(stamp), std::string::npos) << f;
  }
}

TEST_F(OutputsTest, RerunIsByteIdentical) {
  const Config cfg = small_rate_config();
  write_outputs(dir_, cfg, run_experiment("rate", cfg));
  const std::string first = slurp(dir_ / "summary.json");
  const std::string first_raw = slurp(dir_ / "raw.csv");
  write_outputs(dir_, cfg, run_experiment("rate", cfg));
  EXPECT_EQ(slurp(dir_ / "summary.json"), first);
  EXPECT_EQ(slurp(dir_ / "raw.csv"), first_raw);
}

TEST_F(OutputsTest, PlotScriptUsesRelativePaths) {
  const Config cfg = small_rate_config();
  write_outputs(dir_, cfg, run_experiment("rate", cfg));
  const std::string gp = slurp(dir_ / "plot.gp");
  EXPECT_EQ(gp.find(dir_.string()), std::string::npos);
  std::istringstream lines(gp);
  for (std::string line; std::getline(lines, line);) {
    for (const char* q : {"'", "\""}) {
      const auto open = line.find(q);
      if (open == std::string::npos) continue;
      EXPECT_NE(line[open + 1], '/') << line;
    }
  }
  EXPECT_NE(gp.find("plot.dat"), std::string::npos);
}

TEST_F(OutputsTest, VerifyAcceptsFreshOutput) {
  const Config cfg = small_rate_config();
  write_outputs(dir_, cfg, run_experiment("rate", cfg));
  const VerifyReport r = verify_outputs(dir_);
  EXPECT_TRUE(r.ok);
  EXPECT_TRUE(r.problems.empty());
}

TEST_F(OutputsTest, VerifyDetectsTampering) {
  const Config cfg = small_rate_config();
  write_outputs(dir_, cfg, run_experiment("rate", cfg));
  {
    std::ofstream out(dir_ / "raw.csv", std::ios::app);
    out << "1,1,1,1,1\n";
  }
  VerifyReport r = verify_outputs(dir_);
  EXPECT_FALSE(r.ok);
  ASSERT_FALSE(r.problems.empty());
  EXPECT_NE(r.problems[0].find("raw.csv"), std::string::npos);

  write_outputs(dir_, cfg, run_experiment("rate", cfg));
  std::string summary = slurp(dir_ / "summary.json");
  const auto at = summary.find("\"trials\": 8");
  ASSERT_NE(at, std::string::npos);
  summary.replace(at, 11, "\"trials\": 9");
  std::ofstream(dir_ / "summary.json", std::ios::binary | std::ios::trunc) << summary;
  EXPECT_FALSE(verify_outputs(dir_).ok);
}

TEST_F(OutputsTest, VerifyMissingSummary) {
  fs::create_directories(dir_);
  EXPECT_THROW(verify_outputs(dir_), IoError);
}

TEST_F(OutputsTest, EveryKindWrites) {
  Config cfg = parse_config_text("seed = 3\ntrials = 4\n", ConfigFormat::toml, "t.toml");
  cfg.T_grid = {100, 150};
  for (const std::string& kind : experiment_kinds()) {
    Config c = cfg;
    if (kind == "rate") c.system = small_rate_config().system;
    if (kind == "concentration") {
      c.experiment.T_sandwich = 256;
      c.experiment.T_lower = 256;
    }
    if (kind == "inconsistency") c.T = 200;
    const fs::path d = dir_ / kind;
    write_outputs(d, c, run_experiment(kind, c));
    EXPECT_TRUE(fs::exists(d / "summary.json")) << kind;
    EXPECT_TRUE(verify_outputs(d).ok) << kind;
    const std::string raw = slurp(d / "raw.csv");
    EXPECT_EQ(raw.substr(0, raw.find('\n')), kRawHeader) << kind;
  }
  const nlohmann::json inc = nlohmann::json::parse(slurp(dir_ / "inconsistency" / "summary.json"));
  EXPECT_TRUE(inc["results"].contains("modes"));
}

TEST_F(OutputsTest, UnknownKindRejected) {
  EXPECT_THROW(run_experiment("nonsense", small_rate_config()), InvalidArgument);
}

TEST_F(OutputsTest, UnwritableDirectoryIsIoError) {
  fs::create_directories(dir_);
  std::ofstream(dir_ / "file") << "x";
  const Config cfg = small_rate_config();
  EXPECT_THROW(write_outputs(dir_ / "file" / "sub", cfg, run_experiment("rate", cfg)), IoError);
}
