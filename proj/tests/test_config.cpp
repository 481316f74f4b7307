#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "sysid/config.hpp"
#include "sysid/error.hpp"

using namespace sysid;
namespace fs = std::filesystem;

namespace {

Config toml(const std::string& text) { return parse_config_text(text, ConfigFormat::toml, "test.toml"); }

std::string error_of(const std::string& text, ConfigFormat format = ConfigFormat::toml) {
  try {
    parse_config_text(text, format, "test");
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

const char* kFull = R"(
seed = "18446744073709551615"
delta = 0.1
trials = 25
T = 300
T_grid = [100, 200, 400]

[system]
composite = { similarity_seed = 9, conditioning = 3.0, blocks = [
  { jordan = [{ eigenvalue = 0.5, size = 1 }], tag = "S0" },
  { jordan = [{ re = 0.0, im = 1.0, size = 1 }, { re = 0.0, im = -1.0, size = 1 }], tag = "S1" },
  { jordan = [{ eigenvalue = 1.5, size = 2 }], tag = "S2" } ] }
B = [[1.0], [0.0], [0.5], [0.0], [2.0]]
x0 = [0.0, 1.0, 0.0, 0.0, 0.5]

[noise]
family = "subweibull"
alpha = 2.0
b = 2.0
m = 1.5
delta_trunc = 0.01

[constants]
C = 2.0
c = 0.5
R = 1.0

[bounds]
psi_samples = 500
psi_seed = 7
outbox_grid = 16

[experiment]
a = 1.2
regular_threshold = 0.1
T_lower = 1024
lower_A = [[0.98, 0.0], [0.0, 0.97]]
deltas = [0.01, 0.2]
floor_T = 40
)";

}  // namespace

TEST(Config, MinimalGetsDefaults) {
  const Config c = toml("T = 100\n[system]\nA = [[0.5]]\n");
  EXPECT_EQ(c.T, 100);
  EXPECT_EQ(c.delta, 0.05);
  EXPECT_EQ(c.constants.C, 1.0);
  EXPECT_EQ(c.constants.R, 1.0);
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.noise.family, NoiseFamily::gaussian);
  const SystemSpec s = build_system(c.system, c.base_dir);
  EXPECT_EQ(s.initial_state(), Vector::Zero(1));
  EXPECT_EQ(s.a(0, 0), 0.5);
}

TEST(Config, MatrixFileIsRelativeToConfig) {
  const fs::path dir = fs::temp_directory_path() / "sysid_config_test";
  fs::create_directories(dir);
  std::ofstream(dir / "a.csv") << "0.5,0.1\n0.0,0.3\n";
  std::ofstream(dir / "run.toml") << "T = 50\n[system]\nA_file = \"a.csv\"\n";
  const Config c = parse_config(dir / "run.toml");
  const SystemSpec s = build_system(c.system, c.base_dir);
  EXPECT_EQ(s.a(0, 1), 0.1);
  fs::remove_all(dir);
}

TEST(Config, DescendingGridNamesField) {
  const std::string e = error_of("T_grid = [400, 200]\n[system]\nA = [[0.5]]\n");
  EXPECT_TRUE(contains(e, "T_grid")) << e;
}

TEST(Config, UnknownKeyRejected) {
  const std::string e = error_of("T = 10\nspeed = 3\n[system]\nA = [[0.5]]\n");
  EXPECT_TRUE(contains(e, "speed")) << e;
  EXPECT_TRUE(contains(error_of("[system]\nA = [[0.5]]\n[noise]\nsigma = 2.0\n"), "sigma"));
}

TEST(Config, AllErrorsReportedTogether) {
  const std::string e = error_of("delta = 1.5\ntrials = 0\nT_grid = [3, 2]\n[system]\nA = [[0.5, 1.0]]\n");
  EXPECT_TRUE(contains(e, "delta")) << e;
  EXPECT_TRUE(contains(e, "trials")) << e;
  EXPECT_TRUE(contains(e, "T_grid")) << e;
  EXPECT_TRUE(contains(e, "system")) << e;
}

TEST(Config, SyntaxErrorCarriesLine) {
  const std::string e = error_of("T = 10\n\n[system\nA = 1\n");
  EXPECT_TRUE(contains(e, "test:3:")) << e;
  const std::string j = error_of("{\"T\": 10,\n \"seed\": }\n", ConfigFormat::json);
  EXPECT_TRUE(contains(j, "line 2")) << j;
}

TEST(Config, OneSystemSourceOnly) {
  const std::string e = error_of("[system]\nA = [[0.5]]\nrandom = { d = 2, rho = 0.9, seed = 1 }\n");
  EXPECT_TRUE(contains(e, "system")) << e;
}

TEST(Config, TomlRoundTrip) {
  const Config c = toml(kFull);
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
  const SystemSpec s = build_system(c.system, {});
  EXPECT_EQ(s.dim(), 5);
  EXPECT_EQ(s.partition.size(), 3u);
  const Config back = toml(serialize_config_toml(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, JsonRoundTripMatchesToml) {
  const Config c = toml(kFull);
  const Config j = parse_config_text(config_to_json(c).dump(), ConfigFormat::json, "test.json");
  EXPECT_EQ(j, c);
  EXPECT_EQ(config_hash(j), config_hash(c));
}

TEST(Config, HashChangesWithContent) {
  const Config a = toml("seed = 1\n[system]\nA = [[0.5]]\n");
  const Config b = toml("seed = 2\n[system]\nA = [[0.5]]\n");
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(hex64(config_hash(a)).size(), 16u);
}

TEST(Config, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Config, RandomSystemBuilds) {
  const Config c = toml("[system]\nrandom = { d = 3, rho = 0.9, seed = 4 }\n");
  EXPECT_EQ(build_system(c.system, {}).dim(), 3);
}

TEST(Config, BuildChecksInputShape) {
  const Config c = toml("[system]\njordan = [{ eigenvalue = 0.5, size = 2 }]\nB = [[1.0], [0.0], [1.0]]\n");
  EXPECT_THROW(build_system(c.system, {}), DimensionError);
}

TEST(Config, NoSystemCannotBuild) {
  const Config c = toml("T = 5\n");
  EXPECT_THROW(build_system(c.system, {}), InvalidArgument);
}
