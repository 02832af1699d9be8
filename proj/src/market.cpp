#include "poc/market.hpp"

#include <algorithm>
#include <cmath>

namespace poc::market {

namespace {

constexpr double kQuantityTolerance = 1e-9;

struct OrderRank {
  const Priority *priority;

  bool operator()(const Order *a, const Order *b) const {
    if (a->owner != b->owner) return priority->ahead(a->owner, b->owner);
    if (a->submitted_at != b->submitted_at) return a->submitted_at < b->submitted_at;
    return a->order_id < b->order_id;
  }
};

// Counterparty order: best price for the prioritised side first, then time.
bool better_bid(const Order *a, const Order *b) {
  if (a->unit_price != b->unit_price) return a->unit_price > b->unit_price;
  if (a->submitted_at != b->submitted_at) return a->submitted_at < b->submitted_at;
  return a->order_id < b->order_id;
}

bool better_ask(const Order *a, const Order *b) {
  if (a->unit_price != b->unit_price) return a->unit_price < b->unit_price;
  if (a->submitted_at != b->submitted_at) return a->submitted_at < b->submitted_at;
  return a->order_id < b->order_id;
}

}  // namespace

const char *to_string(OrderState s) {
  switch (s) {
    case OrderState::open: return "open";
    case OrderState::matched: return "matched";
    case OrderState::delivered: return "delivered";
    case OrderState::settled: return "settled";
    case OrderState::expired: return "expired";
  }
  return "?";
}

void Order::validate() const {
  if (order_id.empty()) throw InvalidArgument("order id must be non-empty");
  if (!(quantity > 0) || !std::isfinite(quantity)) throw InvalidArgument("order quantity must be > 0");
  if (!(unit_price > 0) || !std::isfinite(unit_price)) throw InvalidArgument("order unit price must be > 0");
  if (latest_delivery < submitted_at) throw InvalidArgument("order latest delivery precedes submission");
}

Priority Priority::from_list(const contribution::ContributionList &list, std::set<NodeId> flagged) {
  Priority p;
  for (const auto &e : list.entries()) p.energy_contribution[e.node_id] = e.energy_value;
  p.flagged = std::move(flagged);
  return p;
}

bool Priority::ahead(NodeId a, NodeId b) const {
  const bool fa = flagged.contains(a);
  const bool fb = flagged.contains(b);
  if (fa != fb) return !fa;
  auto ce = [this](NodeId id) {
    auto it = energy_contribution.find(id);
    return it == energy_contribution.end() ? 0.0 : it->second;
  };
  const double ca = ce(a);
  const double cb = ce(b);
  if (ca != cb) return ca > cb;
  return a < b;
}

bool compatible(const Order &sell, const Order &buy) {
  if (sell.side != Side::sell || buy.side != Side::buy) return false;
  if (sell.owner == buy.owner) return false;
  if (buy.unit_price < sell.unit_price) return false;
  return std::max(sell.submitted_at, buy.submitted_at) <= std::min(sell.latest_delivery, buy.latest_delivery);
}

Phase determine_phase(const std::vector<Order> &open_orders) {
  double supply = 0;
  double demand = 0;
  for (const auto &o : open_orders) (o.side == Side::sell ? supply : demand) += o.quantity;
  return supply >= demand ? Phase::supply_exceeds_demand : Phase::demand_exceeds_supply;
}

std::vector<MatchProposal> match_orders(const std::vector<Order> &open_orders, const Priority &priority, Phase phase) {
  std::vector<const Order *> sells;
  std::vector<const Order *> buys;
  std::map<std::string, double> remaining;
  for (const auto &o : open_orders) {
    if (o.state != OrderState::open) continue;
    (o.side == Side::sell ? sells : buys).push_back(&o);
    remaining[o.order_id] = o.quantity;
  }

  const bool sellers_lead = phase == Phase::supply_exceeds_demand;
  auto &leaders = sellers_lead ? sells : buys;
  auto &counterparties = sellers_lead ? buys : sells;
  std::sort(leaders.begin(), leaders.end(), OrderRank{&priority});
  std::sort(counterparties.begin(), counterparties.end(), sellers_lead ? better_bid : better_ask);

  std::vector<MatchProposal> out;
  for (const Order *lead : leaders) {
    for (const Order *other : counterparties) {
      double &lead_left = remaining[lead->order_id];
      if (lead_left <= 0) break;
      double &other_left = remaining[other->order_id];
      if (other_left <= 0) continue;
      const Order &sell = sellers_lead ? *lead : *other;
      const Order &buy = sellers_lead ? *other : *lead;
      if (!compatible(sell, buy)) continue;
      const double q = std::min(lead_left, other_left);
      out.push_back(MatchProposal{sell.order_id, buy.order_id, q, sell.unit_price});
      lead_left -= q;
      other_left -= q;
    }
  }
  return out;
}

AuditReport audit_priority(const std::vector<Order> &open_orders, const std::vector<MatchProposal> &matches,
                           const Priority &priority, Phase phase) {
  const bool sellers_lead = phase == Phase::supply_exceeds_demand;
  const Side lead_side = sellers_lead ? Side::sell : Side::buy;

  std::map<std::string, const Order *> by_id;
  for (const auto &o : open_orders) by_id[o.order_id] = &o;

  std::map<std::string, double> filled;
  std::map<std::string, std::vector<std::string>> counterparties_of;
  for (const auto &m : matches) {
    filled[m.sell_order_id] += m.quantity;
    filled[m.buy_order_id] += m.quantity;
    const auto &lead_id = sellers_lead ? m.sell_order_id : m.buy_order_id;
    const auto &other_id = sellers_lead ? m.buy_order_id : m.sell_order_id;
    counterparties_of[lead_id].push_back(other_id);
  }

  AuditReport report;
  OrderRank rank{&priority};
  for (const auto &u : open_orders) {
    if (u.side != lead_side || u.state != OrderState::open) continue;
    if (u.quantity - filled[u.order_id] <= kQuantityTolerance) continue;
    for (const auto &[matched_id, others] : counterparties_of) {
      const Order *m = by_id.at(matched_id);
      if (!rank(&u, m)) continue;
      for (const auto &other_id : others) {
        ++report.checked_pairs;
        const Order *c = by_id.at(other_id);
        const bool ok = sellers_lead ? compatible(u, *c) : compatible(*c, u);
        if (ok) ++report.violations;
      }
    }
  }
  return report;
}

void Market::open_account(NodeId id, Money balance) {
  if (balance < 0) throw InvalidArgument("initial balance must be >= 0");
  if (accounts_.contains(id)) throw InvalidArgument("account already exists");
  accounts_.emplace(id, Account{id, balance, 0});
}

const Account &Market::account(NodeId id) const {
  auto it = accounts_.find(id);
  if (it == accounts_.end()) throw InvalidArgument("unknown account " + std::to_string(id.value));
  return it->second;
}

Account &Market::mutable_account(NodeId id) {
  auto it = accounts_.find(id);
  if (it == accounts_.end()) throw InvalidArgument("unknown account " + std::to_string(id.value));
  return it->second;
}

Money Market::total_funds() const {
  Money total = 0;
  for (const auto &[id, a] : accounts_) total += a.balance + a.escrow;
  return total;
}

void Market::begin_round(std::int64_t round_index) {
  round_index_ = round_index;
  ordinals_.clear();
  trade_records_.clear();
}

SubmitResult Market::submit_order(Order order) {
  order.validate();
  if (orders_.contains(order.order_id)) return {false, "duplicate order id"};
  auto it = accounts_.find(order.owner);
  if (it == accounts_.end()) return {false, "unknown account"};
  Account &acct = it->second;
  order.state = OrderState::open;
  order.parent_id.reset();
  order.commitment = 0;
  if (order.side == Side::buy) {
    const Money cost = money_of(order.quantity, order.unit_price);
    if (cost > acct.balance) return {false, "insufficient balance"};
    acct.balance -= cost;
    acct.escrow += cost;
    order.commitment = cost;
  }
  open_ids_.insert(order.order_id);
  orders_.emplace(order.order_id, std::move(order));
  return {true, {}};
}

std::vector<Order> Market::open_orders() const {
  std::vector<Order> out;
  out.reserve(open_ids_.size());
  for (const auto &id : open_ids_) out.push_back(orders_.at(id));
  return out;
}

const Order &Market::order(const std::string &id) const {
  auto it = orders_.find(id);
  if (it == orders_.end()) throw InvalidArgument("unknown order " + id);
  return it->second;
}

const Match &Market::match(const std::string &id) const {
  auto it = matches_.find(id);
  if (it == matches_.end()) throw InvalidArgument("unknown match " + id);
  return it->second;
}

std::string Market::split_order(const std::string &order_id, double quantity) {
  Order &parent = orders_.at(order_id);
  if (quantity >= parent.quantity - kQuantityTolerance) return order_id;
  Order child = parent;
  child.order_id = order_id + "." + std::to_string(++split_counter_[order_id]);
  child.parent_id = order_id;
  child.quantity = quantity;
  parent.quantity -= quantity;
  if (parent.side == Side::buy) {
    child.commitment = std::min(parent.commitment, money_of(quantity, parent.unit_price));
    parent.commitment -= child.commitment;
  }
  auto id = child.order_id;
  orders_.emplace(id, std::move(child));
  return id;
}

Market::MatchingOutcome Market::run_matching(const Priority &priority, Tick now) {
  MatchingOutcome outcome;
  std::vector<Order> book;
  for (auto &o : open_orders()) {
    if (o.latest_delivery >= now) book.push_back(std::move(o));
  }
  outcome.phase = determine_phase(book);
  auto proposals = match_orders(book, priority, outcome.phase);
  outcome.audit = audit_priority(book, proposals, priority, outcome.phase);

  for (const auto &p : proposals) {
    const auto sell_id = split_order(p.sell_order_id, p.quantity);
    const auto buy_id = split_order(p.buy_order_id, p.quantity);
    Order &sell = orders_.at(sell_id);
    Order &buy = orders_.at(buy_id);
    sell.state = OrderState::matched;
    buy.state = OrderState::matched;
    open_ids_.erase(sell_id);
    open_ids_.erase(buy_id);

    Match m;
    m.match_id = "m" + std::to_string(++match_seq_);
    m.sell_order_id = sell_id;
    m.buy_order_id = buy_id;
    m.seller = sell.owner;
    m.buyer = buy.owner;
    m.quantity = sell.quantity;
    m.unit_price = p.unit_price;
    m.commitment = buy.commitment;
    m.matched_at = now;
    m.latest_delivery = std::min(sell.latest_delivery, buy.latest_delivery);
    outcome.match_ids.push_back(m.match_id);
    matches_.emplace(m.match_id, std::move(m));
  }
  return outcome;
}

contribution::TradeRecord Market::record_delivery(const std::string &match_id, double p_real, Tick tick) {
  auto it = matches_.find(match_id);
  if (it == matches_.end()) throw InvalidArgument("unknown match " + match_id);
  Match &m = it->second;
  if (m.state == MatchState::settled) throw StaleDelivery("delivery recorded after settlement of " + match_id);
  if (m.state == MatchState::delivered) throw StaleDelivery("delivery already recorded for " + match_id);
  if (!(p_real >= 0)) throw InvalidArgument("delivered quantity must be >= 0");
  m.delivered = p_real;
  m.delivered_at = tick;
  m.state = MatchState::delivered;
  orders_.at(m.sell_order_id).state = OrderState::delivered;
  orders_.at(m.buy_order_id).state = OrderState::delivered;

  contribution::TradeRecord rec;
  rec.order_id = m.sell_order_id;
  rec.p_order = m.quantity;
  rec.p_real = p_real;
  rec.round_index = round_index_;
  rec.intra_round_ordinal = ++ordinals_[m.seller];
  trade_records_.push_back(rec);
  return rec;
}

chain::Transaction Market::settle(const std::string &match_id, Tick now) {
  auto it = matches_.find(match_id);
  if (it == matches_.end()) throw InvalidArgument("unknown match " + match_id);
  Match &m = it->second;
  if (m.state == MatchState::settled) throw InvalidArgument("match already settled: " + match_id);
  if (m.state == MatchState::matched) {
    if (now <= m.latest_delivery) throw InvalidArgument("match not yet deliverable: " + match_id);
    record_delivery(match_id, 0.0, now);
  }

  const double delivered = *m.delivered;
  const Money paid = std::min(m.commitment, money_of(std::min(delivered, m.quantity), m.unit_price));
  const Money refund = m.commitment - paid;

  Account &buyer = mutable_account(m.buyer);
  Account &seller = mutable_account(m.seller);
  buyer.escrow -= m.commitment;
  buyer.balance += refund;
  seller.balance += paid;
  orders_.at(m.buy_order_id).commitment = 0;

  m.state = MatchState::settled;
  orders_.at(m.sell_order_id).state = OrderState::settled;
  orders_.at(m.buy_order_id).state = OrderState::settled;

  chain::Transaction tx{m.match_id, m.seller, m.buyer, m.quantity, delivered, m.unit_price, paid, refund};
  settlements_.emplace(match_id, tx);
  return tx;
}

std::size_t Market::expire_orders(Tick now) {
  std::size_t n = 0;
  for (auto it = open_ids_.begin(); it != open_ids_.end();) {
    Order &o = orders_.at(*it);
    if (o.latest_delivery >= now) {
      ++it;
      continue;
    }
    o.state = OrderState::expired;
    if (o.side == Side::buy && o.commitment > 0) {
      Account &acct = mutable_account(o.owner);
      acct.escrow -= o.commitment;
      acct.balance += o.commitment;
      o.commitment = 0;
    }
    it = open_ids_.erase(it);
    ++n;
  }
  return n;
}

bool Market::validate_transaction(const chain::Transaction &tx) const {
  auto it = settlements_.find(tx.match_id);
  return it != settlements_.end() && it->second == tx;
}

}  // namespace poc::market
