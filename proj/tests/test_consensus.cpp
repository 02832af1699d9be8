#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "poc/consensus.hpp"

using namespace poc;
using namespace poc::consensus;
using poc::testing::Committee;

TEST_CASE("seeds are 32 bytes and differ by audience and round") {
  Rng a(1);
  Rng b(1);
  auto s1 = generate_seed(a, 3, Audience::cp);
  auto s2 = generate_seed(b, 3, Audience::cs);
  CHECK(s1.bytes.size() == 32);
  CHECK(s1.bytes != s2.bytes);
  Rng c(1);
  CHECK(generate_seed(c, 3, Audience::cp) == s1);
}

TEST_CASE("weighted_select draws two distinct positive-weight nodes") {
  Committee f;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    auto [x, y] = weighted_select(f.list, rng);
    CHECK(x != y);
  }
  auto tiny = f.list.without({NodeId{1}, NodeId{2}, NodeId{3}, NodeId{4}, NodeId{5}, NodeId{6}, NodeId{7}, NodeId{8}, NodeId{9}});
  CHECK_THROWS_AS(weighted_select(tiny, rng), InsufficientCandidates);
  CHECK_THROWS_AS(weighted_select(f.list, rng, SelectionStrategy::roulette,
                                  {NodeId{1}, NodeId{2}, NodeId{3}, NodeId{4}, NodeId{5}, NodeId{6}, NodeId{7}, NodeId{8}, NodeId{9}}),
                  InsufficientCandidates);
}

TEST_CASE("roulette frequencies follow weights") {
  // weights 1/i; the first pick of node i has probability (1/i) / H_10
  Committee f;
  Rng rng(11);
  std::map<NodeId, int> hits;
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++hits[weighted_select(f.list, rng).first];
  double h = 0;
  for (int i = 1; i <= 10; ++i) h += 1.0 / i;
  for (std::uint32_t i = 1; i <= 10; ++i) {
    const double p = (1.0 / i) / h;
    const double sd = std::sqrt(n * p * (1 - p));
    CHECK(std::abs(hits[NodeId{i}] - n * p) < 5 * sd);
  }
}

TEST_CASE("literal scan only ever returns entries above the draw") {
  Committee f;
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    auto [x, y] = weighted_select(f.list, rng, SelectionStrategy::literal_scan);
    CHECK(x != y);
  }
}

TEST_CASE("tally: agreement needs count > n, forged proofs never count") {
  Committee f;
  const auto other = f.variant(1.0);
  std::vector<ComputingSubmission> subs{f.submit(NodeId{1}, f.list), f.submit(NodeId{2}, f.list),
                                        f.submit(NodeId{3}, f.list), f.submit(NodeId{4}, other)};
  auto t = tally_lists(subs, 2, f.round, f.registry);
  REQUIRE(t.agreed);
  CHECK(*t.agreed == f.list);
  CHECK(t.disagreeing == std::vector<NodeId>{NodeId{4}});

  subs[2] = f.submit_bad_proof(NodeId{3}, f.list);
  t = tally_lists(subs, 2, f.round, f.registry);
  CHECK_FALSE(t.agreed);
  CHECK(t.bad_proof == std::vector<NodeId>{NodeId{3}});

  SUBCASE("non-members and duplicate senders are ignored") {
    std::vector<ComputingSubmission> s2{f.submit(NodeId{1}, f.list), f.submit(NodeId{1}, f.list),
                                        f.submit(NodeId{2}, f.list), f.submit(NodeId{9}, f.list)};
    auto t2 = tally_lists(s2, 2, f.round, f.registry);
    CHECK_FALSE(t2.agreed);
    CHECK(t2.bad_proof == std::vector<NodeId>{NodeId{9}});
  }
  SUBCASE("a tampered signature is a bad proof") {
    auto s = f.submit(NodeId{2}, f.list);
    s.pick_cp = NodeId{10};
    std::vector<ComputingSubmission> s3{s};
    CHECK(tally_lists(s3, 2, f.round, f.registry).bad_proof == std::vector<NodeId>{NodeId{2}});
  }
}

TEST_CASE("validate_lists flags dissenters and forms disjoint committees") {
  Committee f;
  FlagRegistry flags;
  Rng rng(8);
  std::vector<ComputingSubmission> subs{f.submit(NodeId{1}, f.list), f.submit(NodeId{2}, f.list),
                                        f.submit(NodeId{3}, f.list), f.submit(NodeId{4}, f.variant(5))};
  auto r = validate_lists(subs, 2, f.round, f.registry, {4, 3}, rng, flags);
  CHECK(flags.contains(NodeId{4}));
  CHECK(r.flags.size() == 1);
  CHECK(r.flags[0].cause == FlagCause::bad_list);
  CHECK(r.agreed.find(NodeId{4}) == nullptr);
  CHECK(r.next_cp.size() == 4);
  CHECK(r.next_cs.size() == 3);
  std::set<NodeId> all(r.next_cp.begin(), r.next_cp.end());
  all.insert(r.next_cs.begin(), r.next_cs.end());
  CHECK(all.size() == 7);
  CHECK_FALSE(all.contains(NodeId{4}));
  CHECK(r.agreeing_submitters == std::vector<NodeId>{NodeId{1}, NodeId{2}, NodeId{3}});

  std::vector<ComputingSubmission> split{f.submit(NodeId{1}, f.list), f.submit(NodeId{2}, f.list)};
  CHECK_THROWS_AS(validate_lists(split, 2, f.round, f.registry, {4, 3}, rng, flags), ConsensusFailure);
}

TEST_CASE("form_committees honours picks in order, then tops up") {
  Committee f;
  Rng rng(1);
  std::size_t added = 0;
  auto [cp, cs] = form_committees(f.list, {{NodeId{9}, NodeId{8}}, {NodeId{9}, NodeId{7}}}, {4, 3}, rng, {NodeId{1}}, &added);
  CHECK(cp.front() == NodeId{9});
  CHECK(cs[0] == NodeId{8});
  CHECK(cs[1] == NodeId{7});
  CHECK(added == 4);
  CHECK(std::find(cp.begin(), cp.end(), NodeId{1}) == cp.end());
  CHECK(std::find(cs.begin(), cs.end(), NodeId{1}) == cs.end());
}

TEST_CASE("round-end broadcast fires once, only while trading") {
  RoundState r;
  r.trade_time = 10;
  r.trade_limit = 5;
  CHECK_FALSE(broadcast_round_end(r, 50, 0));  // still computing
  r.phase = Phase::trading;
  CHECK_FALSE(broadcast_round_end(r, 3, 2));
  CHECK(broadcast_round_end(r, 3, 5));
  CHECK(r.phase == Phase::finalizing);
  CHECK_FALSE(broadcast_round_end(r, 30, 9));
}

TEST_CASE("finalize picks the largest verified VRF and resets its contribution") {
  Committee f;
  chain::Chain ch;
  FlagRegistry flags;
  std::vector<Candidate> cands;
  for (NodeId id : f.round.candidates_cs) cands.push_back({id, &f.keys.at(id), BehaviorPolicy::honest(), f.round.seed_cs});
  auto props = propose_blocks(f.round, cands, {}, ch, 10);
  REQUIRE(props.size() == 3);
  auto best = std::max_element(props.begin(), props.end(), [](const Proposal &a, const Proposal &b) {
    return a.block.vrf_value < b.block.vrf_value;
  })->proposer;
  std::vector<NodeId> voters;
  for (std::uint32_t i = 1; i <= 10; ++i) voters.push_back(NodeId{i});
  auto sup = vrf::keygen(to_bytes("sup"));
  auto ledger = f.list;
  auto res = finalize_block(props, f.round, ch, f.registry, voters, [](NodeId, const Proposal &) { return true; }, sup,
                            flags, 20, &ledger);
  CHECK(res.proposer == best);
  CHECK_FALSE(res.supervisor_block);
  CHECK(ch.size() == 2);
  CHECK(ledger.find(best)->value == 0.0);
  CHECK(ledger.find(best)->history.back().reset);
}

TEST_CASE("rejected leader is flagged and the next one is tried") {
  Committee f;
  chain::Chain ch;
  FlagRegistry flags;
  std::vector<Candidate> cands;
  for (NodeId id : f.round.candidates_cs) cands.push_back({id, &f.keys.at(id), BehaviorPolicy::honest(), f.round.seed_cs});
  auto props = propose_blocks(f.round, cands, {}, ch, 10);
  std::sort(props.begin(), props.end(), [](auto &a, auto &b) { return a.block.vrf_value > b.block.vrf_value; });
  const NodeId leader = props[0].proposer;
  std::vector<NodeId> voters;
  for (std::uint32_t i = 1; i <= 10; ++i) voters.push_back(NodeId{i});
  auto sup = vrf::keygen(to_bytes("sup"));
  auto res = finalize_block(props, f.round, ch, f.registry, voters,
                            [&](NodeId, const Proposal &p) { return p.proposer != leader; }, sup, flags, 20);
  CHECK(res.proposer == props[1].proposer);
  CHECK(res.attempts == 2);
  CHECK(flags.contains(leader));
  REQUIRE(res.flags.size() == 1);
  CHECK(res.flags[0].cause == FlagCause::bad_block);
}

TEST_CASE("with no acceptable proposal the supervisor appends an empty block") {
  Committee f;
  chain::Chain ch;
  FlagRegistry flags;
  auto sup = vrf::keygen(to_bytes("sup"));
  std::vector<Candidate> cands{{NodeId{5}, &f.keys.at(NodeId{5}), BehaviorPolicy::honest(), f.round.seed_cp}};
  auto props = propose_blocks(f.round, cands, {}, ch, 10);  // VRF on the wrong seed
  auto res = finalize_block(props, f.round, ch, f.registry, {NodeId{1}, NodeId{2}},
                            [](NodeId, const Proposal &) { return true; }, sup, flags, 20);
  CHECK(res.supervisor_block);
  CHECK(res.proposer == kSupervisor);
  CHECK(res.block.transactions.empty());
  CHECK(flags.contains(NodeId{5}));
  CHECK(ch.size() == 2);
}

TEST_CASE("invalid_block_proposer tampers with settlements") {
  Committee f;
  chain::Chain ch;
  chain::Transaction t{"m1", NodeId{1}, NodeId{2}, 1, 1, 1, kMoneyScale, 0};
  std::vector<Candidate> cands{{NodeId{5}, &f.keys.at(NodeId{5}), BehaviorPolicy::invalid_block_proposer(), f.round.seed_cs}};
  auto p = propose_blocks(f.round, cands, {t}, ch, 1);
  REQUIRE(p.size() == 1);
  CHECK_FALSE(p[0].block.transactions[0] == t);
  auto empty = propose_blocks(f.round, cands, {}, ch, 1);
  CHECK(empty[0].block.transactions.size() == 1);
}

TEST_CASE("bootstrap and replacement") {
  std::vector<NodeId> ids;
  for (std::uint32_t i = 1; i <= 10; ++i) ids.push_back(NodeId{i});
  Rng rng(4);
  auto r = bootstrap(ids, {4, 3}, rng);
  CHECK(r.committee_cp.size() == 4);
  CHECK(r.candidates_cs.size() == 3);
  for (NodeId id : r.committee_cp) CHECK_FALSE(r.candidates_cs.contains(id));
  CHECK_THROWS_AS(bootstrap({NodeId{1}, NodeId{2}}, {4, 3}, rng), ConfigError);

  Committee f;
  const NodeId gone = *r.committee_cp.begin();
  auto rep = replace_flagged_members(r, f.list, {gone}, rng);
  REQUIRE(rep.size() == 1);
  CHECK(rep[0].second == Role::computing);
  CHECK(r.committee_cp.size() == 4);
  CHECK_FALSE(r.committee_cp.contains(gone));
  CHECK_FALSE(r.candidates_cs.contains(rep[0].first));
}

TEST_CASE("forged lists inflate the forger or the whole colluding group") {
  Committee f;
  auto forged = forge_list(f.list, NodeId{2}, BehaviorPolicy::list_forger(), {});
  CHECK(forged.find(NodeId{2})->value == doctest::Approx(1002));
  CHECK(forged.find(NodeId{3})->value == doctest::Approx(3));
  auto group = forge_list(f.list, NodeId{2}, BehaviorPolicy::colluder(1), {NodeId{2}, NodeId{3}});
  CHECK(group.find(NodeId{3})->value == doctest::Approx(1003));
  CHECK_FALSE(group == f.list);
}

TEST_CASE("flag registry keeps the first cause") {
  FlagRegistry reg;
  CHECK(reg.flag(NodeId{1}, FlagCause::bad_list, 3));
  CHECK_FALSE(reg.flag(NodeId{1}, FlagCause::bad_block, 4));
  CHECK(reg.history().size() == 1);
  CHECK(reg.history()[0].round_detected == 3);
}
