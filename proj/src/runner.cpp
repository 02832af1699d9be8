#include "poc/runner.hpp"

#include <algorithm>
#include <fstream>
#include <future>

#include "poc/config.hpp"

namespace poc::runner {

namespace fs = std::filesystem;
using simnet::ConsensusMode;

std::pair<simnet::SimulationMetrics, simnet::SimulationMetrics> run_block_time_pair(simnet::ScenarioConfig config) {
  config.consensus_mode = ConsensusMode::poc;
  auto poc = simnet::run(config);
  config.consensus_mode = ConsensusMode::pow;
  config.pow_difficulty = simnet::difficulty_for_mean(report::mean(poc.block_times()));
  auto pow = simnet::run(config);
  return {std::move(poc), std::move(pow)};
}

namespace {

std::vector<simnet::SimulationMetrics> run_seed(simnet::ScenarioConfig cfg, const std::vector<ConsensusMode> &modes) {
  const bool poc = std::find(modes.begin(), modes.end(), ConsensusMode::poc) != modes.end();
  const bool pow = std::find(modes.begin(), modes.end(), ConsensusMode::pow) != modes.end();
  if (poc && pow) {
    auto [a, b] = run_block_time_pair(cfg);
    return {std::move(a), std::move(b)};
  }
  cfg.consensus_mode = poc ? ConsensusMode::poc : ConsensusMode::pow;
  return {simnet::run(cfg)};
}

void write_file(const fs::path &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
  if (!out) throw ConfigError("cannot write " + path.string());
}

}  // namespace

RunResult run_scenario(const RunRequest &req) {
  RunResult res;
  simnet::ScenarioConfig cfg;
  std::vector<ConsensusMode> modes = req.modes;
  std::vector<report::Report> reports = req.reports;
  if (req.config_path) {
    cfg = config::load_file(*req.config_path);
    if (modes.empty()) modes = {cfg.consensus_mode};
    if (reports.empty()) {
      reports = {report::Report::proposer_distribution, report::Report::election_counts, report::Report::weight_trace};
      if (!cfg.behaviors.empty()) reports.push_back(report::Report::malicious_trace);
    }
  } else {
    const auto &sc = report::find_scenario(req.scenario);
    cfg = sc.config;
    if (modes.empty()) modes = sc.modes;
    if (reports.empty()) reports = sc.reports;
  }
  if (req.rounds) cfg.rounds = *req.rounds;
  if (req.seed) cfg.rng_seed = *req.seed;
  if (req.node_count) cfg.node_count = *req.node_count;
  if (req.sweep < 1) throw ConfigError("sweep must be >= 1");
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
  cfg.consensus_mode = modes.front();
  cfg.validate();

  res.scenario = cfg.name;
  res.config = cfg;
  res.reports = reports;

  std::vector<std::future<std::vector<simnet::SimulationMetrics>>> jobs;
  for (std::size_t i = 0; i < req.sweep; ++i) {
    auto c = cfg;
    c.rng_seed = cfg.rng_seed + i;
    jobs.push_back(std::async(req.sweep > 1 ? std::launch::async : std::launch::deferred, run_seed, c, modes));
  }
  for (auto &j : jobs) {
    for (auto &m : j.get()) res.runs.push_back(std::move(m));
  }

  if (!req.output_dir.empty()) {
    const fs::path dir = req.output_dir / res.scenario;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    for (auto r : reports) {
      const auto path = dir / (std::string(report::to_string(r)) + ".csv");
      write_file(path, report::build(r, res.runs, cfg.params).to_csv());
      res.files.push_back(path);
    }
    const auto summary = dir / "summary.json";
    write_file(summary, report::summary_json(res.scenario, res.runs));
    res.files.push_back(summary);
  }
  return res;
}

}  // namespace poc::runner
