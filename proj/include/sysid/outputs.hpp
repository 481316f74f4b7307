#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sysid/bounds.hpp"
#include "sysid/config.hpp"
#include "sysid/experiments.hpp"
#include "sysid/ols.hpp"
#include "sysid/plot.hpp"

namespace sysid {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kRawHeader = "T,trial,error,lambda_min_YT,selfnorm";

/// raw.csv contents: kRawHeader, then one line per record; NaN prints as nan.
std::string raw_csv(const std::vector<TrialRecord>& rows);
std::vector<TrialRecord> parse_raw_csv(std::string_view text);

nlohmann::json to_json(const RateFit& fit);
nlohmann::json to_json(const McSummary& summary);
nlohmann::json to_json(const RateSweepResult& result);
nlohmann::json to_json(const InconsistencyResult& result);
nlohmann::json to_json(const SpectrumResult& result);
nlohmann::json to_json(const ConcentrationResult& result);
nlohmann::json to_json(const StructureResult& result);
nlohmann::json to_json(const NotationTable& table);
nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const EstimateReport& report);
nlohmann::json matrix_to_json(const Matrix& m);

struct Artifact {
  std::string name;
  std::string contents;
};

/// Everything a command persists besides summary.json.
struct OutputBundle {
  std::string kind;
  nlohmann::json results = nlohmann::json::object();
  /// Written as raw.csv when present.
  std::optional<std::vector<TrialRecord>> raw;
  std::vector<Artifact> extra;
  /// Emitted as plot.gp + plot.dat + plot.svg when present.
  std::optional<PlotSpec> plot;
};

/// "seed=<seed> config_hash=<hex>", the line embedded in plot files.
std::string provenance_stamp(const Config& config);

/// Writes every artifact atomically, then summary.json, which records the
/// schema version, kind, seed, config hash, config echo, results and an
/// FNV-1a digest of every other file written. Returns the paths in write
/// order. Throws IoError with the offending path.
std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir, const Config& config,
                                                 const OutputBundle& bundle);

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Re-parses the config echo in summary.json, recomputes its hash and every
/// artifact digest, and checks the stamp in plot files.
VerifyReport verify_outputs(const std::filesystem::path& dir);

}  // namespace sysid
