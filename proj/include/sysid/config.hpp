#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sysid/bounds.hpp"
#include "sysid/lti_sim.hpp"

namespace sysid {

/// Where the system matrix comes from. Exactly one source per config.
struct SystemSource {
  enum class Kind { none, matrix, file, jordan, composite, random };

  Kind kind = Kind::none;
  Matrix a;                // matrix
  std::string a_file;      // file, relative to the config's directory
  JordanSpec jordan;       // jordan
  std::vector<CompositeBlock> blocks;  // composite
  std::uint64_t similarity_seed = 0;
  double conditioning = 1.0;
  int random_d = 0;        // random: Gaussian matrix rescaled to radius rho
  double random_rho = 0.0;
  std::uint64_t random_seed = 0;

  std::optional<Matrix> b;
  std::string b_file;
  Vector x0;               // empty means zero
};

bool operator==(const SystemSource& x, const SystemSource& y);

/// Parameters used only by some experiment kinds.
struct ExperimentParams {
  double a = 1.1;
  double regular_threshold = 0.05;
  int T_selfnorm = 512;
  int T_sandwich = 2048;
  int T_markov = 512;
  int T_lower = 4096;
  std::optional<Matrix> lower_A;
  std::vector<double> deltas{0.05, 0.1};
  int floor_T = 60;

  friend bool operator==(const ExperimentParams& x, const ExperimentParams& y);
};

struct Config {
  SystemSource system;
  NoiseModel noise;
  std::optional<int> T;
  std::vector<int> T_grid;
  std::optional<int> trials;
  std::uint64_t seed = 0;
  double delta = 0.05;
  BoundConstants constants;
  BoundOptions bounds;
  ExperimentParams experiment;
  /// Directory that relative file references resolve against; not serialized.
  std::filesystem::path base_dir;

  friend bool operator==(const Config& x, const Config& y);
};

enum class ConfigFormat { toml, json };

/// Parses and validates. Syntax errors carry the line; semantic errors are
/// collected and reported together, each naming its field. Unknown keys are
/// rejected.
Config parse_config_text(std::string_view text, ConfigFormat format, std::string_view origin = "<config>",
                         const std::filesystem::path& base_dir = {});

/// Format chosen by extension: .json is JSON, anything else TOML.
Config parse_config(const std::filesystem::path& path);

std::string serialize_config_toml(const Config& config);
nlohmann::json config_to_json(const Config& config);

/// FNV-1a 64 of the canonical JSON form.
std::uint64_t config_hash(const Config& config);
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Builds the system; throws InvalidArgument when no source is configured.
SystemSpec build_system(const SystemSource& source, const std::filesystem::path& base_dir);

}  // namespace sysid
