#pragma once

// Scenario execution shared by the command-line tool and the Python module.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "poc/report.hpp"
#include "poc/simnet.hpp"

namespace poc::runner {

struct RunRequest {
  std::string scenario;                             // built-in name; ignored when config_path is set
  std::optional<std::filesystem::path> config_path;
  std::filesystem::path output_dir;                 // empty: nothing is written
  std::optional<std::int64_t> rounds;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> node_count;
  std::vector<simnet::ConsensusMode> modes;         // empty: the scenario's own
  std::vector<report::Report> reports;              // empty: the scenario's own
  std::size_t sweep = 1;                            // consecutive seeds starting at `seed`
};

struct RunResult {
  std::string scenario;
  simnet::ScenarioConfig config;                    // after overrides, first seed
  std::vector<simnet::SimulationMetrics> runs;      // seed-major, PoC before PoW
  std::vector<report::Report> reports;
  std::vector<std::filesystem::path> files;
};

/// Resolves the request into configs, runs them and writes one table per
/// report plus summary.json under output_dir/<scenario>/. When both modes
/// run, the PoW difficulty is chosen so its expected block time matches the
/// PoC run of the same seed. Throws ConfigError on bad requests.
RunResult run_scenario(const RunRequest &request);

/// The PoC and PoW pair used for the block-time comparison.
std::pair<simnet::SimulationMetrics, simnet::SimulationMetrics> run_block_time_pair(simnet::ScenarioConfig config);

}  // namespace poc::runner
