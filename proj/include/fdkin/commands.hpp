#pragma once

#include "fdkin/config.hpp"
#include "fdkin/solver.hpp"

#include <json.hpp>

#include <string>

namespace fdkin {

using Json = nlohmann::ordered_json;

/// Simulation assembled from a config (kernel, rule, grid, initial data, step options).
SimulationSetup simulation_setup(const RunConfig& cfg);

/// Summary of a finished run: drifts, Pauli extremes, entropy balance, distance ratios.
Json simulation_summary(const RunConfig& cfg, const SimulationResult& r);

Json equilibrium_report(const RunConfig& cfg);
Json positivity_report(const RunConfig& cfg);
Json kernel_report(const RunConfig& cfg);
Json oracle_report(const RunConfig& cfg);

/// Runs a subcommand and writes its artifacts under out_dir:
/// simulate -> <prefix>.csv, <prefix>_final.snap, <prefix>_summary.json; others -> <prefix>_<command>.json.
/// Returns the JSON that was written. Unknown commands raise ConfigError, write failures IoError.
Json execute(const std::string& command, const RunConfig& cfg, const std::string& out_dir);

} // namespace fdkin
