#include "poc/report.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <nlohmann/json.hpp>
namespace poc::report {

ChiSquare chi_square_uniform(const std::vector<double> &counts) {
  if (counts.size() < 2) throw InvalidArgument("chi-square needs at least two categories");
  double total = 0;
  for (double c : counts) total += c;
  if (!(total > 0)) throw InvalidArgument("chi-square needs a positive total");
  const double expected = total / static_cast<double>(counts.size());
  ChiSquare out;
  for (double c : counts) out.statistic += (c - expected) * (c - expected) / expected;
  out.dof = counts.size() - 1;
  boost::math::chi_squared dist(static_cast<double>(out.dof));
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

double mean(const std::vector<double> &xs) {
  if (xs.empty()) throw InvalidArgument("mean of an empty sample");
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double coefficient_of_variation(const std::vector<double> &xs) {
  const double m = mean(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size())) / m;
}

const char *to_string(Report r) {
  switch (r) {
    case Report::proposer_distribution: return "proposer_distribution";
    case Report::election_counts: return "election_counts";
    case Report::diminishing_returns: return "diminishing_returns";
    case Report::weight_trace: return "weight_trace";
    case Report::malicious_trace: return "malicious_trace";
    case Report::block_time_comparison: return "block_time_comparison";
  }
  return "?";
}

const std::vector<Report> &all_reports() {
  static const std::vector<Report> all{Report::proposer_distribution, Report::election_counts,
                                       Report::diminishing_returns,   Report::weight_trace,
                                       Report::malicious_trace,       Report::block_time_comparison};
  return all;
}

Report parse_report(std::string_view s) {
  for (Report r : all_reports()) {
    if (s == to_string(r)) return r;
  }
  throw ConfigError("unknown report: " + std::string(s));
}

namespace {

Scenario make(std::string name, std::string description, std::uint64_t seed, std::vector<Report> reports,
              std::vector<simnet::ConsensusMode> modes = {simnet::ConsensusMode::poc}) {
  Scenario s{std::move(name), std::move(description), {}, std::move(reports), std::move(modes)};
  s.config.name = s.name;
  s.config.rng_seed = seed;
  return s;
}

}  // namespace

const std::vector<Scenario> &catalogue() {
  static const std::vector<Scenario> scenarios = [] {
    using simnet::ConsensusMode;
    std::vector<Scenario> v;
    v.push_back(make("fig6", "proposer distribution, 10 honest nodes", 6, {Report::proposer_distribution}));
    v.push_back(make("fig7", "computing / candidate / proposer election counts, 10 honest nodes", 7,
                     {Report::election_counts}));
    v.push_back(make("fig8", "diminishing returns of repeated trades within a round", 8,
                     {Report::diminishing_returns, Report::weight_trace}));
    v.push_back(make("fig9", "contribution value and weight of every node per round", 9, {Report::weight_trace}));
    auto a = make("fig10a", "one list_forger among 10 nodes", 10, {Report::malicious_trace, Report::election_counts});
    a.config.behaviors[NodeId{3}] = BehaviorPolicy::list_forger();
    v.push_back(std::move(a));
    auto b = make("fig10b", "a list_forger and an invalid_block_proposer among 10 nodes", 11,
                  {Report::malicious_trace, Report::election_counts});
    b.config.behaviors[NodeId{3}] = BehaviorPolicy::list_forger();
    b.config.behaviors[NodeId{7}] = BehaviorPolicy::invalid_block_proposer();
    v.push_back(std::move(b));
    v.push_back(make("fig11", "block time of PoC against a PoW baseline of matching mean", 12,
                     {Report::block_time_comparison}, {ConsensusMode::poc, ConsensusMode::pow}));
    return v;
  }();
  return scenarios;
}

const Scenario &find_scenario(std::string_view name) {
  for (const auto &s : catalogue()) {
    if (s.name == name) return s;
  }
  throw ConfigError("unknown scenario: " + std::string(name));
}

std::string Table::to_csv() const {
  std::string out;
  auto line = [&](const std::vector<std::string> &cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto &r : rows) line(r);
  return out;
}

namespace {

std::string num(double x) { return format_double(x); }
std::string num(std::int64_t x) { return std::to_string(x); }
std::string num(std::size_t x) { return std::to_string(x); }
std::string id(NodeId n) { return std::to_string(n.value); }

std::string behavior(const simnet::SimulationMetrics &m, NodeId n) {
  auto it = m.behaviors.find(n);
  return it == m.behaviors.end() ? "honest" : to_string(it->second);
}

}  // namespace

Table proposer_distribution(const simnet::SimulationMetrics &m) {
  Table t{{"seed", "node", "proposer_count", "share", "expected_share"}, {}};
  const double rounds = static_cast<double>(m.rounds.size());
  const double expected = 1.0 / static_cast<double>(m.node_count);
  for (const auto &[n, c] : m.counts) {
    t.rows.push_back({num(m.rng_seed), id(n), num(c.proposer),
                      num(rounds > 0 ? static_cast<double>(c.proposer) / rounds : 0.0), num(expected)});
  }
  return t;
}

Table election_counts(const simnet::SimulationMetrics &m) {
  Table t{{"seed", "node", "behavior", "computing", "candidate", "proposer"}, {}};
  for (const auto &[n, c] : m.counts) {
    t.rows.push_back({num(m.rng_seed), id(n), behavior(m, n), num(c.computing), num(c.candidate), num(c.proposer)});
  }
  return t;
}

Table diminishing_returns(const contribution::Params &params, int max_trades) {
  Table t{{"k", "marginal_etc", "cumulative_etc", "closed_form"}, {}};
  double previous = 0;
  double closed = 0;
  for (int k = 1; k <= max_trades; ++k) {
    std::vector<contribution::TradeRecord> trades;
    for (int j = 1; j <= k; ++j) trades.push_back({"t" + std::to_string(j), 1.0, 1.0, 0, j});
    const double total = contribution::energy_trading_contribution(trades, params);
    closed += params.alpha2 / (static_cast<double>(k) * k);
    t.rows.push_back({num(std::int64_t{k}), num(total - previous), num(total), num(closed)});
    previous = total;
  }
  return t;
}

Table weight_trace(const simnet::SimulationMetrics &m) {
  Table t{{"seed", "round", "node", "value", "energy_value", "weight"}, {}};
  for (const auto &s : m.series) {
    t.rows.push_back({num(m.rng_seed), num(s.round), id(s.node), num(s.value), num(s.energy_value), num(s.weight)});
  }
  return t;
}

Table malicious_trace(const simnet::SimulationMetrics &m) {
  Table t{{"seed", "round", "node", "behavior", "flagged", "computing", "candidate", "proposer"}, {}};
  std::map<NodeId, std::int64_t> flagged_at;
  for (const auto &f : m.flags) flagged_at.emplace(f.node_id, f.round_detected);
  for (const auto &r : m.rounds) {
    for (const auto &[n, c] : m.counts) {
      auto it = flagged_at.find(n);
      const bool flagged = it != flagged_at.end() && it->second <= r.round;
      const bool cp = std::find(r.committee_cp.begin(), r.committee_cp.end(), n) != r.committee_cp.end();
      const bool cs = std::find(r.candidates_cs.begin(), r.candidates_cs.end(), n) != r.candidates_cs.end();
      const bool proposer = !r.supervisor_block && r.proposer == n;
      t.rows.push_back({num(m.rng_seed), num(r.round), id(n), behavior(m, n), flagged ? "1" : "0", cp ? "1" : "0",
                        cs ? "1" : "0", proposer ? "1" : "0"});
    }
  }
  return t;
}

Table block_time_comparison(const std::vector<simnet::SimulationMetrics> &runs) {
  Table t{{"seed", "mode", "round", "block_time", "ticks", "pow_difficulty"}, {}};
  for (const auto &m : runs) {
    for (const auto &r : m.rounds) {
      t.rows.push_back({num(m.rng_seed), simnet::to_string(m.mode), num(r.round), num(r.block_time), num(r.ticks),
                        m.mode == simnet::ConsensusMode::pow ? num(std::int64_t{m.pow_difficulty}) : ""});
    }
  }
  return t;
}

Table build(Report r, const std::vector<simnet::SimulationMetrics> &runs, const contribution::Params &params) {
  if (r == Report::diminishing_returns) return diminishing_returns(params);
  if (r == Report::block_time_comparison) return block_time_comparison(runs);
  Table out;
  for (const auto &m : runs) {
    if (m.mode != simnet::ConsensusMode::poc) continue;  // the other tables describe PoC committees
    Table t = r == Report::proposer_distribution ? proposer_distribution(m)
              : r == Report::election_counts     ? election_counts(m)
              : r == Report::weight_trace        ? weight_trace(m)
                                                 : malicious_trace(m);
    out.header = std::move(t.header);
    for (auto &row : t.rows) out.rows.push_back(std::move(row));
  }
  return out;
}

std::string summary_json(const std::string &scenario, const std::vector<simnet::SimulationMetrics> &runs) {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  auto arr = nlohmann::ordered_json::array();
  for (const auto &m : runs) {
    nlohmann::ordered_json r;
    r["mode"] = simnet::to_string(m.mode);
    r["rng_seed"] = m.rng_seed;
    r["node_count"] = m.node_count;
    r["rounds_completed"] = m.rounds.size();
    r["chain_height"] = m.chain_height;
    r["chain_audit_ok"] = m.chain_audit_ok;
    auto flags = nlohmann::ordered_json::array();
    for (const auto &f : m.flags) {
      flags.push_back({{"node", f.node_id.value}, {"round", f.round_detected}, {"cause", consensus::to_string(f.cause)}});
    }
    r["flags"] = flags;
    std::vector<double> proposers;
    for (const auto &[n, c] : m.counts) proposers.push_back(static_cast<double>(c.proposer));
    double total = 0;
    for (double p : proposers) total += p;
    if (proposers.size() >= 2 && total > 0) {
      auto chi = chi_square_uniform(proposers);
      r["proposer_chi_square"] = {{"statistic", chi.statistic}, {"dof", chi.dof}, {"p_value", chi.p_value}};
    }
    const auto bt = m.block_times();
    if (!bt.empty()) {
      r["block_time_mean"] = mean(bt);
      r["block_time_cv"] = coefficient_of_variation(bt);
    }
    if (m.mode == simnet::ConsensusMode::pow) r["pow_difficulty"] = m.pow_difficulty;
    r["consensus_failures"] = m.consensus_failures;
    r["supervisor_blocks"] = m.supervisor_blocks;
    r["funds_conserved"] = m.funds_initial == m.funds_final;
    r["priority_checks"] = m.priority_checks;
    r["priority_violations"] = m.priority_violations;
    arr.push_back(std::move(r));
  }
  j["runs"] = arr;
  return j.dump(2) + "\n";
}

}  // namespace poc::report
