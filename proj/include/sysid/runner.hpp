#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sysid/config.hpp"
#include "sysid/outputs.hpp"

namespace sysid {

/// rate, inconsistency, spectrum, concentration, structure.
const std::vector<std::string>& experiment_kinds();

/// Runs one experiment kind from a parsed config and packages its results.
/// Unset fields take the experiment's own defaults.
OutputBundle run_experiment(std::string_view kind, const Config& config);

}  // namespace sysid
