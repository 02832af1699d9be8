#pragma once

// JSON form of ScenarioConfig. Every key is optional; unknown keys and
// mistyped values raise ConfigError.

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "poc/simnet.hpp"

namespace poc::config {

simnet::ScenarioConfig from_json(const nlohmann::json &j, simnet::ScenarioConfig base = {});
nlohmann::ordered_json to_json(const simnet::ScenarioConfig &cfg);

/// Reads and validates a config file. Missing or unreadable files and parse
/// errors are ConfigErrors.
simnet::ScenarioConfig load_file(const std::filesystem::path &path, simnet::ScenarioConfig base = {});

}  // namespace poc::config
