#include <doctest.h>

#include <cmath>

#include "poc/contribution.hpp"
#include "poc/rng.hpp"

using namespace poc;
using namespace poc::contribution;

namespace {

// Two-pass population standard deviation; independent of the Welford loop
// in node_weight.
double oracle_weight(const std::vector<double> &xs, double eps) {
  if (xs.size() == 1) return 1.0 / std::max(eps, xs[0]);
  double sum = 0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return 1.0 / std::max(eps, std::sqrt(ss / static_cast<double>(xs.size())));
}

TradeRecord trade(int k, double ordered = 1.0, double delivered = 1.0, std::int64_t round = 0) {
  return TradeRecord{"o" + std::to_string(k), ordered, delivered, round, k};
}

Bytes pk(int i) { return Bytes(32, static_cast<std::uint8_t>(i)); }

}  // namespace

TEST_CASE("generation contribution is alpha1 times total output") {
  Params p;
  p.alpha1 = 2.5;
  CHECK(power_generation_contribution({{1.0, 2.0, 0.5}}, p) == doctest::Approx(8.75));
  CHECK(power_generation_contribution({}, p) == 0.0);
  CHECK_THROWS_AS(power_generation_contribution({{1.0, -0.1}}, p), InvalidArgument);
}

TEST_CASE("transaction quality is delivered over ordered, clamped") {
  CHECK(transaction_quality(2.0, 1.0) == doctest::Approx(0.5));
  CHECK(transaction_quality(2.0, 3.0) == 1.0);
  CHECK(raw_transaction_quality(2.0, 3.0) == doctest::Approx(1.5));
  CHECK(transaction_quality(2.0, 0.0) == 0.0);
  CHECK_THROWS_AS(transaction_quality(0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(transaction_quality(1.0, -1.0), InvalidArgument);
}

TEST_CASE("k-th trade of a round earns alpha2 * TQ / k^2") {
  Params p;
  double previous = 0;
  for (int k = 1; k <= 8; ++k) {
    std::vector<TradeRecord> ts;
    for (int j = 1; j <= k; ++j) ts.push_back(trade(j));
    const double total = energy_trading_contribution(ts, p);
    const double marginal = total - previous;
    CHECK(std::abs(marginal - p.alpha2 / (k * k)) <= 1e-12 * p.alpha2);
    previous = total;
  }
  // partial delivery scales only its own term
  std::vector<TradeRecord> ts{trade(1), trade(2, 2.0, 1.0)};
  CHECK(energy_trading_contribution(ts, p) == doctest::Approx(10.0 + 10.0 * 0.5 / 4));
}

TEST_CASE("trade ordinals are validated") {
  Params p;
  CHECK_THROWS_AS(energy_trading_contribution({trade(1), trade(1)}, p), InvalidArgument);
  CHECK_THROWS_AS(energy_trading_contribution({trade(2)}, p), InvalidArgument);
  CHECK_THROWS_AS(energy_trading_contribution({trade(1, 1, 1, 0), trade(2, 1, 1, 1)}, p), InvalidArgument);
  CHECK(energy_trading_contribution({}, p) == 0.0);
}

TEST_CASE("online and consensus contributions") {
  Params p;
  CHECK(stable_online_contribution({10, 110}, p) == doctest::Approx(1.0));
  CHECK_THROWS_AS(stable_online_contribution({5, 4}, p), InvalidArgument);
  CHECK(consensus_contribution({ServiceRole::computing, 0, 10}, p) == doctest::Approx(10.0));
  CHECK(consensus_contribution({ServiceRole::consensus, 25, 10}, p) == doctest::Approx(5.0));
  CHECK_THROWS_AS(consensus_contribution({ServiceRole::computing, 3, 10}, p), InvalidArgument);
  CHECK_THROWS_AS(consensus_contribution({ServiceRole::consensus, -1, 10}, p), InvalidArgument);
}

TEST_CASE("node_weight against a two-pass oracle") {
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> xs(1 + rng.below(60));
    for (auto &x : xs) x = rng.uniform(0, 50);
    const double got = node_weight(xs, 1e-6);
    const double want = oracle_weight(xs, 1e-6);
    CHECK(std::abs(got - want) <= 1e-12 * want);
  }
  CHECK(node_weight({4.0}) == doctest::Approx(0.25));
  CHECK(node_weight({0.0}, 1e-6) == doctest::Approx(1e6));
  CHECK(node_weight({3.0, 3.0, 3.0}, 1e-3) == doctest::Approx(1e3));
  CHECK_THROWS_AS(node_weight({}), InvalidArgument);
}

TEST_CASE("reset zeroes value, appends one marker and reweighs") {
  Entry e{NodeId{1}, pk(1), 12.0, 8.0, {{4, 2, false}, {4, 2, false}}, 0};
  auto r = reset_contribution(e, 1e-6);
  CHECK(r.value == 0.0);
  CHECK(r.energy_value == 0.0);
  REQUIRE(r.history.size() == 3);
  CHECK(r.history.back().reset);
  CHECK(r.weight == doctest::Approx(oracle_weight({6, 6, 0}, 1e-6)));
  CHECK(reset_contribution(r, 1e-6).history.size() == 3);
}

TEST_CASE("list orders by value then id and rejects duplicates") {
  ContributionList l({{NodeId{3}, pk(3), 5, 5, {}, 1}, {NodeId{1}, pk(1), 5, 5, {}, 1}, {NodeId{2}, pk(2), 9, 1, {}, 1}});
  REQUIRE(l.size() == 3);
  CHECK(l.entries()[0].node_id == NodeId{2});
  CHECK(l.entries()[1].node_id == NodeId{1});
  CHECK(l.entries()[2].node_id == NodeId{3});
  CHECK(l.by_energy_contribution().front()->node_id == NodeId{1});
  CHECK_THROWS_AS(ContributionList({{NodeId{1}, pk(1), 0, 0, {}, 1}, {NodeId{1}, pk(1), 1, 0, {}, 1}}), InvalidArgument);
  CHECK(l.without({NodeId{2}}).size() == 2);
  CHECK(l.find(NodeId{7}) == nullptr);
}

TEST_CASE("serialization is canonical and round-trips") {
  Entry a{NodeId{1}, pk(1), 0.1 + 0.2, 0.3, {{0.1, 0.2, false}, {0, 0, true}, {0.3, 0.0, false}}, 1.0 / 3.0};
  a.value = 0.3;
  a.energy_value = 0.3;
  Entry b{NodeId{2}, pk(2), 0, 0, {}, 1};
  ContributionList l({a, b});
  const auto text = l.serialize();
  CHECK(text.substr(0, text.find('\n')) == "1," + to_hex(pk(1)) + ",0.3,0.3333333333333333,0.1/0.2,R,0.3/0");
  auto back = ContributionList::parse(text);
  CHECK(back == l);
  CHECK(back.serialize() == text);
  CHECK(back.digest() == l.digest());
  CHECK_THROWS_AS(ContributionList::parse("1,zz,0,1,\n"), InvalidArgument);
  CHECK_THROWS_AS(ContributionList::parse("x,00,0,1,\n"), InvalidArgument);
  CHECK_THROWS_AS(ContributionList::parse("1,00,0,1,3.0\n"), InvalidArgument);
}

TEST_CASE("build_contribution_list accrues one row per node") {
  Params p;
  std::map<NodeId, Bytes> reg{{NodeId{1}, pk(1)}, {NodeId{2}, pk(2)}, {NodeId{3}, pk(3)}};
  auto start = initial_list(reg);
  RoundActivity act;
  act.round_index = 0;
  act.nodes[NodeId{1}].generation = {{2.0}};
  act.nodes[NodeId{1}].trades = {trade(1), trade(2)};
  act.nodes[NodeId{1}].session = OnlineSession{0, 100};
  act.nodes[NodeId{2}].service = ConsensusService{ServiceRole::computing, 0, 10};
  LedgerState st{&start, &act, reg, {}};
  auto l = build_contribution_list(st, p);
  const double ce1 = 2.0 + 10.0 + 10.0 / 4 + 1.0;
  const auto *e1 = l.find(NodeId{1});
  REQUIRE(e1);
  CHECK(e1->value == doctest::Approx(ce1));
  CHECK(e1->energy_value == doctest::Approx(ce1));
  CHECK(e1->weight == doctest::Approx(oracle_weight({ce1}, p.epsilon)));
  const auto *e2 = l.find(NodeId{2});
  CHECK(e2->value == doctest::Approx(10.0));
  CHECK(e2->energy_value == 0.0);
  CHECK(e2->consensus_value() == doctest::Approx(10.0));
  const auto *e3 = l.find(NodeId{3});
  CHECK(e3->history.size() == 1);
  CHECK(e3->weight == doctest::Approx(1e6));

  SUBCASE("proposer reset applies before the round's accrual") {
    RoundActivity next;
    next.round_index = 1;
    next.nodes[NodeId{1}].proposer_reset = true;
    next.nodes[NodeId{1}].generation = {{1.0}};
    LedgerState st2{&l, &next, reg, {}};
    auto l2 = build_contribution_list(st2, p);
    const auto *r = l2.find(NodeId{1});
    CHECK(r->value == doctest::Approx(1.0));
    CHECK(r->history.size() == 3);
    CHECK(r->history[1].reset);
    CHECK(r->weight == doctest::Approx(oracle_weight({ce1, 0.0, 1.0}, p.epsilon)));
  }
  SUBCASE("flagged nodes are dropped; null activity only filters") {
    LedgerState st3{&l, nullptr, reg, {NodeId{2}}};
    auto l3 = build_contribution_list(st3, p);
    CHECK(l3.size() == 2);
    CHECK(l3.find(NodeId{2}) == nullptr);
    CHECK(*l3.find(NodeId{1}) == *l.find(NodeId{1}));
  }
  SUBCASE("deterministic") {
    CHECK(build_contribution_list(st, p).serialize() == l.serialize());
  }
}

TEST_CASE("params validation") {
  Params p;
  p.alpha2 = -1;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  Params q;
  q.epsilon = 0;
  CHECK_THROWS_AS(q.validate(), InvalidArgument);
}
