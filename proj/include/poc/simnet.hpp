#pragma once

// Deterministic discrete-event harness. One thread, one clock, reliable FIFO
// links with unit delay; loss only through the offline_flaky policy.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "poc/behavior.hpp"
#include "poc/consensus.hpp"
#include "poc/contribution.hpp"
#include "poc/market.hpp"
#include "poc/rng.hpp"

namespace poc::simnet {

// ---------------------------------------------------------------------------
// Network

struct OrderNotice {  // a user's order reaching the trading platform
  market::Order order;
};

using Message = std::variant<consensus::CommitteeDispatch, consensus::CandidateDispatch,
                             consensus::ComputingSubmission, consensus::RoundEndBroadcast, consensus::Proposal,
                             OrderNotice>;

struct Envelope {
  Tick deliver_at = 0;
  std::uint64_t sequence = 0;
  NodeId from;
  NodeId to;
  Message message;
};

class Network {
 public:
  explicit Network(std::uint64_t seed = 0) : rng_(seed) {}

  void add_node(NodeId id, double drop_probability = 0.0);
  bool has_node(NodeId id) const { return drop_.contains(id); }

  Tick now() const { return now_; }
  void advance_to(Tick t);

  /// Queues for delivery at now + 1. Recipients with a drop probability lose
  /// the message with that probability. Throws RoutingError for unknown nodes.
  void deliver(Message message, NodeId from, NodeId to);

  /// Everything due by now(), in send order.
  std::vector<Envelope> poll();

  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t dropped() const { return dropped_; }
  std::size_t pending() const { return queue_.size(); }

 private:
  Rng rng_;
  std::map<NodeId, double> drop_;
  std::deque<Envelope> queue_;
  Tick now_ = 0;
  std::uint64_t sequence_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
};

// ---------------------------------------------------------------------------
// Configuration

enum class ConsensusMode { poc, pow };
const char *to_string(ConsensusMode m);
ConsensusMode parse_mode(std::string_view s);

/// Per-node generation, demand and trading behaviour. Stands in for load
/// forecasting: every round each node draws its generation and demand and
/// posts its surplus or deficit as orders.
struct MarketProfile {
  std::size_t devices = 2;
  double device_capacity = 3.0;  // kW per device; output ~ U(0, capacity)
  double consumption_min = 1.0;
  double consumption_max = 6.0;
  std::size_t max_orders_per_round = 3;
  double ask_min = 1.0;
  double ask_max = 2.0;
  double bid_min = 1.5;
  double bid_max = 3.0;
  double delivery_reliability = 0.95;  // probability of full delivery
  Tick delivery_window_min = 10;
  Tick delivery_window_max = 40;
  double initial_balance = 10000.0;
  double online_fraction = 0.95;  // share of each round a node is online
};

struct ScenarioConfig {
  std::string name = "custom";
  std::size_t node_count = 10;
  consensus::CommitteeSizes sizes{4, 3};
  std::size_t threshold_n = 2;
  std::int64_t rounds = 100;
  std::uint64_t rng_seed = 1;
  contribution::Params params;
  MarketProfile market;
  std::map<NodeId, BehaviorPolicy> behaviors;  // unlisted nodes are honest
  ConsensusMode consensus_mode = ConsensusMode::poc;
  int pow_difficulty = 6;       // leading-zero bits
  double pow_hash_rate = 1.0;   // attempts per tick
  Tick window_period = 10;
  Tick trade_time = 100;
  std::size_t trade_limit = 100;
  consensus::SelectionStrategy selection = consensus::SelectionStrategy::roulette;

  void validate() const;
  BehaviorPolicy behavior_of(NodeId id) const;
};

// ---------------------------------------------------------------------------
// Metrics

struct RoundTrace {
  std::int64_t round = 0;
  std::vector<NodeId> committee_cp;
  std::vector<NodeId> candidates_cs;
  NodeId proposer;
  bool supervisor_block = false;
  bool consensus_failure = false;
  std::size_t topped_up = 0;
  std::vector<consensus::MaliciousFlag> flags;
  std::string block_hash;
  std::size_t tx_count = 0;
  std::size_t orders = 0;
  std::size_t matches = 0;
  Tick ticks = 0;             // round start to block append
  std::uint64_t events = 0;   // messages, votes and market events in the round
  double block_time = 0;      // consensus messages, votes and packed txs (PoC); mining ticks (PoW)
};

struct ElectionCounts {
  std::int64_t proposer = 0;
  std::int64_t computing = 0;
  std::int64_t candidate = 0;
};

struct NodeSample {
  std::int64_t round = 0;
  NodeId node;
  double value = 0;
  double energy_value = 0;
  double weight = 0;
};

struct SimulationMetrics {
  std::string scenario;
  ConsensusMode mode = ConsensusMode::poc;
  std::uint64_t rng_seed = 0;
  std::size_t node_count = 0;
  std::vector<RoundTrace> rounds;
  std::map<NodeId, ElectionCounts> counts;
  std::vector<NodeSample> series;
  std::vector<consensus::MaliciousFlag> flags;
  std::map<NodeId, BehaviorPolicy> behaviors;
  Money funds_initial = 0;
  Money funds_final = 0;
  std::size_t priority_checks = 0;
  std::size_t priority_violations = 0;
  std::size_t consensus_failures = 0;
  std::size_t supervisor_blocks = 0;
  bool chain_audit_ok = false;
  std::size_t chain_height = 0;
  int pow_difficulty = 0;

  std::vector<double> block_times() const;
};

/// Runs `config.rounds` rounds. Deterministic in the config. Throws
/// ConfigError for bad configs and InvariantViolation when a protocol
/// invariant breaks mid-run.
SimulationMetrics run(const ScenarioConfig &config);

/// Simulation with access to the final chain, for audit tooling.
struct RunArtifacts {
  SimulationMetrics metrics;
  chain::Chain chain;
};
RunArtifacts run_with_chain(const ScenarioConfig &config);

// ---------------------------------------------------------------------------
// PoW baseline

/// Hash attempts until one clears `difficulty` leading zero bits
/// (success probability 2^-difficulty per attempt), divided by
/// `hash_rate` attempts per tick.
double pow_baseline_round(int difficulty, Rng &rng, double hash_rate = 1.0);

/// Real SHA-256 search over `header || nonce`; returns attempts used.
std::uint64_t pow_mine(ByteView header, int difficulty, std::uint64_t *nonce_out = nullptr);

/// Difficulty whose expected attempts 2^d is closest to `mean`.
int difficulty_for_mean(double mean);

}  // namespace poc::simnet
