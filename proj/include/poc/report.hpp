#pragma once

// Built-in scenarios and the tables/summary written for each run.

#include <string>
#include <vector>

#include "poc/simnet.hpp"

namespace poc::report {

struct ChiSquare {
  double statistic = 0;
  std::size_t dof = 0;
  double p_value = 1;
};

/// Goodness of fit of `counts` against equal expected frequencies.
ChiSquare chi_square_uniform(const std::vector<double> &counts);

/// Population mean and coefficient of variation.
double mean(const std::vector<double> &xs);
double coefficient_of_variation(const std::vector<double> &xs);

enum class Report {
  proposer_distribution,
  election_counts,
  diminishing_returns,
  weight_trace,
  malicious_trace,
  block_time_comparison,
};
const char *to_string(Report r);
Report parse_report(std::string_view s);
const std::vector<Report> &all_reports();

struct Scenario {
  std::string name;
  std::string description;
  simnet::ScenarioConfig config;
  std::vector<Report> reports;
  std::vector<simnet::ConsensusMode> modes;
};

const std::vector<Scenario> &catalogue();
/// Throws ConfigError for unknown names.
const Scenario &find_scenario(std::string_view name);

/// Header row plus data rows, written comma-separated.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
};

Table proposer_distribution(const simnet::SimulationMetrics &m);
Table election_counts(const simnet::SimulationMetrics &m);
/// Marginal and cumulative ETC of k identical full-quality trades in one
/// round, next to the closed form alpha2 * sum 1/j^2.
Table diminishing_returns(const contribution::Params &params, int max_trades = 6);
Table weight_trace(const simnet::SimulationMetrics &m);
Table malicious_trace(const simnet::SimulationMetrics &m);
/// One row per (mode, round) over every run given.
Table block_time_comparison(const std::vector<simnet::SimulationMetrics> &runs);

Table build(Report r, const std::vector<simnet::SimulationMetrics> &runs, const contribution::Params &params);

/// Summary document for a set of runs of one scenario.
std::string summary_json(const std::string &scenario, const std::vector<simnet::SimulationMetrics> &runs);

}  // namespace poc::report
