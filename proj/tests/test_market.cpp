#include <doctest.h>

#include "poc/market.hpp"
#include "poc/rng.hpp"

using namespace poc;
using namespace poc::market;

namespace {

Order sell(const std::string &id, std::uint32_t owner, double q, double ask, Tick at = 0, Tick latest = 100) {
  return Order{id, Side::sell, NodeId{owner}, q, ask, at, latest};
}
Order buy(const std::string &id, std::uint32_t owner, double q, double bid, Tick at = 0, Tick latest = 100) {
  return Order{id, Side::buy, NodeId{owner}, q, bid, at, latest};
}

Priority ce(std::map<std::uint32_t, double> values, std::set<NodeId> flagged = {}) {
  Priority p;
  for (auto [id, v] : values) p.energy_contribution[NodeId{id}] = v;
  p.flagged = std::move(flagged);
  return p;
}

Market market_with(std::initializer_list<std::uint32_t> ids, Money balance = 1000 * kMoneyScale) {
  Market m;
  for (auto id : ids) m.open_account(NodeId{id}, balance);
  return m;
}

}  // namespace

TEST_CASE("compatibility") {
  CHECK(compatible(sell("s", 1, 1, 1.0), buy("b", 2, 1, 1.0)));
  CHECK_FALSE(compatible(sell("s", 1, 1, 1.1), buy("b", 2, 1, 1.0)));
  CHECK_FALSE(compatible(sell("s", 1, 1, 1.0), buy("b", 1, 1, 2.0)));
  CHECK_FALSE(compatible(sell("s", 1, 1, 1.0, 0, 10), buy("b", 2, 1, 2.0, 11, 20)));
  CHECK(compatible(sell("s", 1, 1, 1.0, 0, 10), buy("b", 2, 1, 2.0, 10, 20)));
}

TEST_CASE("order validation") {
  CHECK_THROWS_AS(sell("s", 1, 0, 1).validate(), InvalidArgument);
  CHECK_THROWS_AS(sell("s", 1, 1, -1).validate(), InvalidArgument);
  CHECK_THROWS_AS(sell("s", 1, 1, 1, 10, 5).validate(), InvalidArgument);
  CHECK_THROWS_AS(sell("", 1, 1, 1).validate(), InvalidArgument);
}

TEST_CASE("surplus gives sellers priority by CE") {
  std::vector<Order> book{sell("s1", 1, 2, 1.0), sell("s2", 2, 2, 1.0), buy("b", 3, 2, 2.0)};
  const auto pr = ce({{1, 5.0}, {2, 9.0}});
  CHECK(determine_phase(book) == Phase::supply_exceeds_demand);
  auto ms = match_orders(book, pr, Phase::supply_exceeds_demand);
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].sell_order_id == "s2");
  CHECK(ms[0].quantity == 2.0);
  CHECK(audit_priority(book, ms, pr, Phase::supply_exceeds_demand).violations == 0);
  SUBCASE("a flagged seller drops to the back") {
    auto flagged = ce({{1, 5.0}, {2, 9.0}}, {NodeId{2}});
    auto ms2 = match_orders(book, flagged, Phase::supply_exceeds_demand);
    CHECK(ms2[0].sell_order_id == "s1");
  }
}

TEST_CASE("shortage gives buyers priority; counterparties by best price") {
  std::vector<Order> book{sell("s1", 1, 1, 1.5), sell("s2", 2, 1, 1.2), buy("b1", 3, 2, 2.0), buy("b2", 4, 2, 2.0)};
  const auto pr = ce({{3, 1.0}, {4, 2.0}});
  CHECK(determine_phase(book) == Phase::demand_exceeds_supply);
  auto ms = match_orders(book, pr, Phase::demand_exceeds_supply);
  REQUIRE(ms.size() == 2);
  CHECK(ms[0].buy_order_id == "b2");
  CHECK(ms[0].sell_order_id == "s2");
  CHECK(ms[0].unit_price == 1.2);
  CHECK(ms[1].buy_order_id == "b2");
  CHECK(ms[1].sell_order_id == "s1");
}

TEST_CASE("audit reports a priority inversion") {
  std::vector<Order> book{sell("hi", 1, 1, 1.0), sell("lo", 2, 1, 1.0), buy("b", 3, 1, 2.0)};
  const auto pr = ce({{1, 9.0}, {2, 1.0}});
  std::vector<MatchProposal> wrong{{"lo", "b", 1.0, 1.0}};
  CHECK(audit_priority(book, wrong, pr, Phase::supply_exceeds_demand).violations == 1);
}

TEST_CASE("lifecycle: escrow, partial fills, delivery, settlement") {
  auto m = market_with({1, 2});
  m.begin_round(0);
  REQUIRE(m.submit_order(sell("s", 1, 3.0, 1.0, 0, 50)).accepted);
  REQUIRE(m.submit_order(buy("b", 2, 2.0, 2.0, 0, 50)).accepted);
  const Money start = m.total_funds();
  CHECK(m.account(NodeId{2}).escrow == 4 * kMoneyScale);
  CHECK_FALSE(m.submit_order(buy("b", 2, 1.0, 1.0)).accepted);  // duplicate id

  auto out = m.run_matching(ce({}), 1);
  REQUIRE(out.match_ids.size() == 1);
  const auto &mt = m.match(out.match_ids[0]);
  CHECK(mt.quantity == 2.0);
  CHECK(mt.unit_price == 1.0);
  CHECK(mt.sell_order_id == "s.1");
  CHECK(m.order("s").quantity == doctest::Approx(1.0));
  CHECK(m.order("s").state == OrderState::open);

  auto rec = m.record_delivery(out.match_ids[0], 1.5, 5);
  CHECK(rec.p_order == 2.0);
  CHECK(rec.p_real == 1.5);
  CHECK(rec.intra_round_ordinal == 1);
  CHECK_THROWS_AS(m.record_delivery(out.match_ids[0], 1.0, 6), StaleDelivery);

  auto t = m.settle(out.match_ids[0], 7);
  CHECK(t.amount == money_of(1.5, 1.0));
  CHECK(t.refund == 4 * kMoneyScale - money_of(1.5, 1.0));
  CHECK(m.account(NodeId{1}).balance == 1000 * kMoneyScale + t.amount);
  CHECK(m.account(NodeId{2}).escrow == 0);
  CHECK(m.total_funds() == start);
  CHECK(m.validate_transaction(t));
  auto forged = t;
  forged.amount += 1;
  CHECK_FALSE(m.validate_transaction(forged));
  CHECK_THROWS_AS(m.settle(out.match_ids[0], 8), InvalidArgument);
}

TEST_CASE("undelivered matches settle as zero after the deadline") {
  auto m = market_with({1, 2});
  m.submit_order(sell("s", 1, 1.0, 1.0, 0, 10));
  m.submit_order(buy("b", 2, 1.0, 2.0, 0, 10));
  auto id = m.run_matching(ce({}), 1).match_ids.at(0);
  CHECK_THROWS_AS(m.settle(id, 5), InvalidArgument);
  auto t = m.settle(id, 11);
  CHECK(t.amount == 0);
  CHECK(t.refund == 2 * kMoneyScale);
}

TEST_CASE("insufficient balance and expiry refunds") {
  auto m = market_with({1, 2}, 1 * kMoneyScale);
  auto r = m.submit_order(buy("big", 2, 5.0, 1.0));
  CHECK_FALSE(r.accepted);
  CHECK(r.reason == "insufficient balance");
  REQUIRE(m.submit_order(buy("small", 2, 0.5, 1.0, 0, 10)).accepted);
  CHECK(m.account(NodeId{2}).balance == kMoneyScale / 2);
  CHECK(m.expire_orders(11) == 1);
  CHECK(m.account(NodeId{2}).balance == kMoneyScale);
  CHECK(m.order("small").state == OrderState::expired);
  CHECK(m.open_orders().empty());
}

TEST_CASE("ordinals count each seller's trades within a round") {
  auto m = market_with({1, 2, 3});
  m.begin_round(4);
  m.submit_order(sell("s1", 1, 1, 1));
  m.submit_order(sell("s2", 1, 1, 1));
  m.submit_order(buy("b1", 2, 1, 2));
  m.submit_order(buy("b2", 3, 1, 2));
  auto ids = m.run_matching(ce({}), 1).match_ids;
  REQUIRE(ids.size() == 2);
  CHECK(m.record_delivery(ids[0], 1, 2).intra_round_ordinal == 1);
  CHECK(m.record_delivery(ids[1], 1, 2).intra_round_ordinal == 2);
  CHECK(m.trade_records().size() == 2);
  CHECK(m.trade_records()[0].round_index == 4);
  m.begin_round(5);
  CHECK(m.trade_records().empty());
}

TEST_CASE("random books: conservation and zero priority violations") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = market_with({1, 2, 3, 4, 5, 6});
    Priority pr;
    for (std::uint32_t i = 1; i <= 6; ++i) pr.energy_contribution[NodeId{i}] = rng.uniform(0, 10);
    const Money start = m.total_funds();
    for (int k = 0; k < 30; ++k) {
      const auto owner = static_cast<std::uint32_t>(1 + rng.below(6));
      const Tick at = static_cast<Tick>(rng.below(20));
      auto o = rng.bernoulli(0.5) ? sell("o" + std::to_string(k), owner, rng.uniform(0.1, 3), rng.uniform(1, 2), at, at + 30)
                                  : buy("o" + std::to_string(k), owner, rng.uniform(0.1, 3), rng.uniform(1, 3), at, at + 30);
      m.submit_order(o);
      auto out = m.run_matching(pr, at);
      CHECK(out.audit.violations == 0);
      CHECK(m.total_funds() == start);
    }
    for (const auto &[id, mt] : m.matches()) {
      if (mt.state == MatchState::matched) m.record_delivery(id, mt.quantity * rng.uniform(0, 1.2), 40);
      m.settle(id, 60);
    }
    m.expire_orders(1000);
    CHECK(m.total_funds() == start);
    for (const auto &[id, a] : m.accounts()) CHECK(a.escrow == 0);
  }
}
