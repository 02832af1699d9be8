#pragma once

// P2P energy order book: escrowed submission, contribution-priority matching,
// delivery recording and settlement.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "poc/chain.hpp"
#include "poc/common.hpp"
#include "poc/contribution.hpp"

namespace poc::market {

enum class Side { buy, sell };
enum class OrderState { open, matched, delivered, settled, expired };

const char *to_string(OrderState s);

struct Order {
  std::string order_id;
  Side side = Side::buy;
  NodeId owner;
  double quantity = 0;    // kW
  double unit_price = 0;  // currency per kW
  Tick submitted_at = 0;
  Tick latest_delivery = 0;
  OrderState state = OrderState::open;
  Money commitment = 0;  // escrow held for this order (buy side only)
  std::optional<std::string> parent_id;

  void validate() const;
};

struct Account {
  NodeId node_id;
  Money balance = 0;
  Money escrow = 0;
};

enum class Phase { supply_exceeds_demand, demand_exceeds_supply };

/// Owner ranking for matching: non-flagged before flagged, then CE
/// descending, then node_id ascending.
struct Priority {
  std::map<NodeId, double> energy_contribution;
  std::set<NodeId> flagged;

  static Priority from_list(const contribution::ContributionList &list, std::set<NodeId> flagged);

  /// true if `a` is matched ahead of `b`.
  bool ahead(NodeId a, NodeId b) const;
};

struct MatchProposal {
  std::string sell_order_id;
  std::string buy_order_id;
  double quantity = 0;
  double unit_price = 0;  // seller's ask

  bool operator==(const MatchProposal &) const = default;
};

/// Buyer bid covers the ask, owners differ, and the two delivery windows
/// [submitted_at, latest_delivery] overlap.
bool compatible(const Order &sell, const Order &buy);

Phase determine_phase(const std::vector<Order> &open_orders);

/// Pure matching over a snapshot of open orders. Partial fills are reported
/// as proposals with quantity below the order's.
std::vector<MatchProposal> match_orders(const std::vector<Order> &open_orders, const Priority &priority, Phase phase);

struct AuditReport {
  std::size_t checked_pairs = 0;
  std::size_t violations = 0;
};

/// Flags any order left with unmatched quantity that outranks a matched order
/// on the prioritised side and was compatible with that order's counterparty.
AuditReport audit_priority(const std::vector<Order> &open_orders, const std::vector<MatchProposal> &matches,
                           const Priority &priority, Phase phase);

enum class MatchState { matched, delivered, settled };

struct Match {
  std::string match_id;
  std::string sell_order_id;
  std::string buy_order_id;
  NodeId seller;
  NodeId buyer;
  double quantity = 0;
  double unit_price = 0;
  Money commitment = 0;  // buyer escrow tied to this match
  Tick matched_at = 0;
  Tick latest_delivery = 0;
  MatchState state = MatchState::matched;
  std::optional<double> delivered;
  Tick delivered_at = 0;
};

struct SubmitResult {
  bool accepted = false;
  std::string reason;
};

class Market {
 public:
  Market() = default;

  void open_account(NodeId id, Money balance);
  const Account &account(NodeId id) const;
  const std::map<NodeId, Account> &accounts() const { return accounts_; }
  Money total_funds() const;

  /// Starts a new round: trade ordinals restart.
  void begin_round(std::int64_t round_index);
  std::int64_t round_index() const { return round_index_; }

  SubmitResult submit_order(Order order);

  std::vector<Order> open_orders() const;
  const Order &order(const std::string &id) const;
  const std::map<std::string, Order> &orders() const { return orders_; }

  struct MatchingOutcome {
    Phase phase = Phase::supply_exceeds_demand;
    std::vector<std::string> match_ids;
    AuditReport audit;
  };

  /// Runs match_orders on the open book and applies the proposals.
  MatchingOutcome run_matching(const Priority &priority, Tick now);

  const Match &match(const std::string &id) const;
  const std::map<std::string, Match> &matches() const { return matches_; }

  contribution::TradeRecord record_delivery(const std::string &match_id, double p_real, Tick tick);

  /// Pays the seller for min(delivered, ordered) at the ask, refunds the
  /// rest of the buyer's escrow. Undelivered matches settle as zero delivery.
  chain::Transaction settle(const std::string &match_id, Tick now);

  /// Open orders past their latest delivery tick expire; buy escrow is refunded.
  std::size_t expire_orders(Tick now);

  /// True iff `tx` is identical to a settlement this market produced.
  bool validate_transaction(const chain::Transaction &tx) const;

  /// Trade records produced since begin_round.
  const std::vector<contribution::TradeRecord> &trade_records() const { return trade_records_; }

 private:
  Account &mutable_account(NodeId id);
  std::string split_order(const std::string &order_id, double quantity);

  std::map<NodeId, Account> accounts_;
  std::map<std::string, Order> orders_;
  std::set<std::string> open_ids_;
  std::map<std::string, Match> matches_;
  std::map<std::string, chain::Transaction> settlements_;
  std::map<std::string, int> split_counter_;
  std::map<NodeId, int> ordinals_;
  std::vector<contribution::TradeRecord> trade_records_;
  std::int64_t round_index_ = 0;
  std::uint64_t match_seq_ = 0;
};

}  // namespace poc::market
