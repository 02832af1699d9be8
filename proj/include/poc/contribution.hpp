#pragma once

// Contribution accounting: per-round energy contribution (generation, trade
// quality with diminishing returns, online time), consensus-task
// contribution, node weights and the ordered contribution list that the
// computing committee agrees on.

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "poc/common.hpp"

namespace poc::contribution {

struct Params {
  double alpha1 = 1.0;   // per kW generated
  double alpha2 = 10.0;  // per completed trade
  double alpha3 = 0.01;  // per tick online
  double alpha4 = 1.0;   // per network node, when serving as computing node
  double alpha5 = 0.2;   // per packaged transaction, when serving as proposer
  double epsilon = 1e-6;

  void validate() const;
};

struct GenerationReport {
  std::vector<double> device_outputs;  // kW per device
};

struct TradeRecord {
  std::string order_id;
  double p_order = 0;  // contracted energy
  double p_real = 0;   // delivered energy
  std::int64_t round_index = 0;
  int intra_round_ordinal = 1;  // 1-based among this user's trades in the round
};

struct OnlineSession {
  Tick t_on = 0;
  Tick t_off = 0;
};

enum class ServiceRole { computing, consensus };

struct ConsensusService {
  ServiceRole role = ServiceRole::computing;
  std::int64_t packaged_tx_count = 0;
  std::int64_t network_size = 1;
};

double power_generation_contribution(const GenerationReport &report, const Params &params);

/// Delivered over contracted, clamped to [0, 1].
double transaction_quality(double p_order, double p_real);

/// Unclamped quality as the raw ratio; kept for audit output.
double raw_transaction_quality(double p_order, double p_real);

/// Sum over trades of alpha2 * TQ_k / k^2, k the trade's ordinal in the round.
double energy_trading_contribution(const std::vector<TradeRecord> &trades, const Params &params);

double stable_online_contribution(const OnlineSession &session, const Params &params);

double energy_contribution(const GenerationReport &report, const std::vector<TradeRecord> &trades,
                           const OnlineSession &session, const Params &params);

double consensus_contribution(const ConsensusService &service, const Params &params);

inline double total_contribution(double ce, double cc) { return ce + cc; }

/// 1 / max(eps, x1) for a single round; 1 / max(eps, population stddev)
/// otherwise.
double node_weight(const std::vector<double> &history, double epsilon = Params{}.epsilon);

/// One row of a node's history. Accrual rows carry the round's CE and CC;
/// reset rows mark a proposer reset and count as a zero-valued round for
/// the weight.
struct HistoryRecord {
  double ce = 0;
  double cc = 0;
  bool reset = false;

  double total() const { return reset ? 0.0 : ce + cc; }
  bool operator==(const HistoryRecord &) const = default;
};

struct Entry {
  NodeId node_id;
  Bytes pk;
  double value = 0;         // accumulated N_C since last reset
  double energy_value = 0;  // CE part of value
  std::vector<HistoryRecord> history;
  double weight = 0;

  double consensus_value() const { return value - energy_value; }
  std::vector<double> numeric_history() const;
  bool operator==(const Entry &) const = default;
};

/// Zeroes value, appends a reset marker and recomputes weight.
Entry reset_contribution(Entry entry, double epsilon = Params{}.epsilon);

/// Descending by value, ties by node_id ascending.
class ContributionList {
 public:
  ContributionList() = default;
  explicit ContributionList(std::vector<Entry> entries);

  const std::vector<Entry> &entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const Entry *find(NodeId id) const;

  /// Entries ordered by CE descending (node_id ascending on ties).
  std::vector<const Entry *> by_energy_contribution() const;

  ContributionList without(const std::set<NodeId> &excluded) const;

  /// `node_id,pk_hex,value,weight,history_csv` per line. History items are
  /// `ce/cc` for accrual rows and `R` for reset markers.
  std::string serialize() const;
  static ContributionList parse(std::string_view text);

  /// SHA-256 of serialize().
  const std::array<std::uint8_t, 32> &digest() const;

  bool operator==(const ContributionList &o) const { return entries_ == o.entries_; }

 private:
  std::vector<Entry> entries_;
  // Lists are immutable once built; histories grow every round, so the
  // text form is computed once and shared between copies.
  mutable std::shared_ptr<const std::string> serialized_;
  mutable std::shared_ptr<const std::array<std::uint8_t, 32>> digest_;
};

/// Everything observed for one node during one round.
struct NodeActivity {
  GenerationReport generation;
  std::vector<TradeRecord> trades;
  std::optional<OnlineSession> session;
  std::optional<ConsensusService> service;
  bool proposer_reset = false;
};

struct RoundActivity {
  std::int64_t round_index = 0;
  std::map<NodeId, NodeActivity> nodes;
};

struct LedgerState {
  const ContributionList *previous = nullptr;
  const RoundActivity *activity = nullptr;
  std::map<NodeId, Bytes> registry;  // every known participant and its pk
  std::set<NodeId> flagged;
};

/// Folds one round of activity into the previous list. Flagged nodes are
/// dropped; nodes without activity accrue a zero row.
ContributionList build_contribution_list(const LedgerState &state, const Params &params);

/// Initial list: empty histories, equal unit weights.
ContributionList initial_list(const std::map<NodeId, Bytes> &registry);

}  // namespace poc::contribution
