#include "poc/consensus.hpp"

#include <algorithm>

namespace poc::consensus {

namespace cb = poc::contribution;

const char *to_string(Role r) {
  switch (r) {
    case Role::ordinary: return "ordinary";
    case Role::consensus_candidate: return "consensus_candidate";
    case Role::computing: return "computing";
    case Role::supervision: return "supervision";
  }
  return "?";
}

const char *to_string(Phase p) {
  switch (p) {
    case Phase::computing: return "computing";
    case Phase::trading: return "trading";
    case Phase::finalizing: return "finalizing";
    case Phase::done: return "done";
  }
  return "?";
}

const char *to_string(FlagCause c) {
  switch (c) {
    case FlagCause::bad_list: return "bad_list";
    case FlagCause::bad_block: return "bad_block";
    case FlagCause::bad_proof: return "bad_proof";
  }
  return "?";
}

RandomSeed generate_seed(Rng &rng, std::int64_t round_index, Audience audience) {
  Bytes material = to_bytes(audience == Audience::cp ? "poc-seed/cp/" : "poc-seed/cs/");
  for (int i = 7; i >= 0; --i) material.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(round_index) >> (8 * i)));
  std::array<std::uint8_t, 32> fresh{};
  rng.fill(fresh);
  material.insert(material.end(), fresh.begin(), fresh.end());
  auto digest = vrf::sha256(material);
  return RandomSeed{round_index, audience, Bytes(digest.begin(), digest.end())};
}

Role RoundState::role_of(NodeId id) const {
  if (id == kSupervisor) return Role::supervision;
  if (committee_cp.contains(id)) return Role::computing;
  if (candidates_cs.contains(id)) return Role::consensus_candidate;
  return Role::ordinary;
}

bool FlagRegistry::flag(NodeId id, FlagCause cause, std::int64_t round) {
  if (by_node_.contains(id)) return false;
  MaliciousFlag f{id, round, cause};
  by_node_.emplace(id, f);
  history_.push_back(f);
  return true;
}

std::set<NodeId> FlagRegistry::flagged() const {
  std::set<NodeId> out;
  for (const auto &[id, f] : by_node_) out.insert(id);
  return out;
}

void flag_malicious(FlagRegistry &registry, NodeId id, FlagCause cause, std::int64_t round) {
  registry.flag(id, cause, round);
}

// ---------------------------------------------------------------------------

namespace {

struct Candidates {
  std::vector<NodeId> ids;
  std::vector<double> weights;

  void erase(std::size_t i) {
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(i));
    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(i));
  }
};

Candidates eligible(const cb::ContributionList &list, const std::set<NodeId> &exclude) {
  Candidates c;
  for (const auto &e : list.entries()) {
    if (e.weight > 0 && !exclude.contains(e.node_id) && e.node_id != kSupervisor) {
      c.ids.push_back(e.node_id);
      c.weights.push_back(e.weight);
    }
  }
  return c;
}

std::size_t roulette_draw(const Candidates &c, Rng &rng) {
  double total = 0;
  for (double w : c.weights) total += w;
  // (1 - u) * total lies in (0, total].
  const double target = (1.0 - rng.uniform()) * total;
  double cumulative = 0;
  for (std::size_t i = 0; i < c.weights.size(); ++i) {
    cumulative += c.weights[i];
    if (cumulative >= target) return i;
  }
  return c.weights.size() - 1;
}

// The printed scan: pick the first entry whose own weight exceeds a draw in
// (0, w_sum); w_sum is computed once over the full list.
std::size_t literal_draw(const Candidates &c, double w_sum, Rng &rng) {
  for (int attempt = 0; attempt < (1 << 20); ++attempt) {
    double u = rng.uniform();
    if (u == 0.0) continue;
    const double w_r = u * w_sum;
    for (std::size_t i = 0; i < c.weights.size(); ++i) {
      if (c.weights[i] > w_r) return i;
    }
  }
  throw InsufficientCandidates("literal scan found no entry above the drawn weight");
}

}  // namespace

std::pair<NodeId, NodeId> weighted_select(const cb::ContributionList &list, Rng &rng, SelectionStrategy strategy,
                                          const std::set<NodeId> &exclude) {
  Candidates c = eligible(list, exclude);
  if (c.ids.size() < 2) throw InsufficientCandidates("weighted_select needs at least two positive-weight entries");
  double w_sum = 0;
  for (double w : c.weights) w_sum += w;

  auto draw = [&]() {
    return strategy == SelectionStrategy::roulette ? roulette_draw(c, rng) : literal_draw(c, w_sum, rng);
  };
  std::size_t first = draw();
  NodeId pick_cp = c.ids[first];
  c.erase(first);
  std::size_t second = draw();
  return {pick_cp, c.ids[second]};
}

std::vector<NodeId> weighted_sample(const cb::ContributionList &list, std::size_t count, Rng &rng,
                                    const std::set<NodeId> &exclude) {
  Candidates c = eligible(list, exclude);
  if (c.ids.size() < count) throw InsufficientCandidates("not enough positive-weight entries to sample from");
  std::vector<NodeId> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t i = roulette_draw(c, rng);
    out.push_back(c.ids[i]);
    c.erase(i);
  }
  return out;
}

// ---------------------------------------------------------------------------

Bytes ComputingSubmission::signing_bytes() const {
  Bytes out = to_bytes("poc-submission/");
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(node_id.value >> (8 * i)));
  const auto &digest = list.digest();
  out.insert(out.end(), digest.begin(), digest.end());
  out.insert(out.end(), vrf.value.bytes.begin(), vrf.value.bytes.end());
  out.insert(out.end(), vrf.proof.begin(), vrf.proof.end());
  for (NodeId pick : {pick_cp, pick_cs}) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(pick.value >> (8 * i)));
  }
  return out;
}

cb::ContributionList forge_list(const cb::ContributionList &honest, NodeId forger, const BehaviorPolicy &policy,
                                const std::set<NodeId> &group) {
  std::vector<cb::Entry> entries = honest.entries();
  for (auto &e : entries) {
    const bool boosted =
        policy.kind == BehaviorKind::colluder ? group.contains(e.node_id) : e.node_id == forger;
    if (boosted) {
      e.value += 1000.0;
      e.energy_value += 1000.0;
      e.weight *= 10.0;
    }
  }
  return cb::ContributionList(std::move(entries));
}

std::vector<ComputingSubmission> submit_lists(const RoundState &round, const std::vector<ComputingNode> &members,
                                              const ListContext &ctx, const std::map<int, std::set<NodeId>> &colluders) {
  std::vector<ComputingSubmission> out;
  for (const auto &m : members) {
    if (!m.held_seed || !m.held_list || !m.keys) continue;
    cb::LedgerState state;
    state.previous = m.held_list;
    state.activity = ctx.activity;
    state.registry = ctx.registry;
    state.flagged = ctx.flagged;
    cb::ContributionList list = cb::build_contribution_list(state, ctx.params);

    if (m.policy.kind == BehaviorKind::list_forger || m.policy.kind == BehaviorKind::colluder) {
      std::set<NodeId> group;
      if (auto it = colluders.find(m.policy.group_id); it != colluders.end()) group = it->second;
      list = forge_list(list, m.id, m.policy, group);
    }

    ComputingSubmission s;
    s.node_id = m.id;
    s.vrf = vrf::evaluate(m.keys->secret_key, m.held_seed->bytes);
    // Picks are driven by the member's own VRF output so they are
    // reproducible by anyone holding the proof.
    Rng picker(vrf::value_prefix(s.vrf.value));
    auto picks = weighted_select(list, picker, ctx.selection, ctx.flagged);
    s.pick_cp = picks.first;
    s.pick_cs = picks.second;
    s.list = std::move(list);
    s.signature = vrf::sign(m.keys->secret_key, s.signing_bytes());
    out.push_back(std::move(s));
  }
  (void)round;
  return out;
}

Tally tally_lists(const std::vector<ComputingSubmission> &submissions, std::size_t threshold_n, const RoundState &round,
                  const std::map<NodeId, Bytes> &registry) {
  Tally tally;
  std::set<NodeId> seen;
  std::vector<const ComputingSubmission *> valid;
  for (const auto &s : submissions) {
    if (!seen.insert(s.node_id).second) continue;
    auto pk = registry.find(s.node_id);
    const bool ok = pk != registry.end() && round.committee_cp.contains(s.node_id) &&
                    vrf::verify(pk->second, round.seed_cp.bytes, s.vrf) &&
                    vrf::verify_signature(pk->second, s.signing_bytes(), s.signature);
    if (!ok) {
      tally.bad_proof.push_back(s.node_id);
      continue;
    }
    valid.push_back(&s);
  }

  std::map<std::array<std::uint8_t, 32>, std::vector<const ComputingSubmission *>> groups;
  for (const auto *s : valid) groups[s->list.digest()].push_back(s);

  const std::vector<const ComputingSubmission *> *best = nullptr;
  bool ambiguous = false;
  for (const auto &[key, members] : groups) {
    if (members.size() <= threshold_n) continue;
    if (!best || members.size() > best->size()) {
      best = &members;
      ambiguous = false;
    } else if (members.size() == best->size()) {
      ambiguous = true;
    }
  }
  if (!best || ambiguous) return tally;

  tally.agreed = best->front()->list;
  tally.agreeing = *best;
  for (const auto *s : valid) {
    if (std::find(best->begin(), best->end(), s) == best->end()) tally.disagreeing.push_back(s->node_id);
  }
  return tally;
}

std::pair<std::vector<NodeId>, std::vector<NodeId>> form_committees(const cb::ContributionList &agreed,
                                                                    const std::vector<std::pair<NodeId, NodeId>> &picks,
                                                                    const CommitteeSizes &sizes, Rng &rng,
                                                                    const std::set<NodeId> &excluded,
                                                                    std::size_t *topped_up) {
  std::vector<NodeId> cp;
  std::vector<NodeId> cs;
  auto taken = [&](NodeId id) {
    return std::find(cp.begin(), cp.end(), id) != cp.end() || std::find(cs.begin(), cs.end(), id) != cs.end();
  };
  auto usable = [&](NodeId id) {
    const auto *e = agreed.find(id);
    return e && e->weight > 0 && !excluded.contains(id) && id != kSupervisor && !taken(id);
  };
  for (const auto &[pick_cp, pick_cs] : picks) {
    if (cp.size() < sizes.computing && usable(pick_cp)) cp.push_back(pick_cp);
    if (cs.size() < sizes.candidates && usable(pick_cs)) cs.push_back(pick_cs);
  }

  std::size_t added = 0;
  auto top_up = [&](std::vector<NodeId> &members, std::size_t target) {
    if (members.size() >= target) return;
    std::set<NodeId> exclude = excluded;
    exclude.insert(cp.begin(), cp.end());
    exclude.insert(cs.begin(), cs.end());
    auto extra = weighted_sample(agreed, target - members.size(), rng, exclude);
    added += extra.size();
    members.insert(members.end(), extra.begin(), extra.end());
  };
  top_up(cp, sizes.computing);
  top_up(cs, sizes.candidates);
  if (topped_up) *topped_up = added;
  return {cp, cs};
}

ValidationResult validate_lists(const std::vector<ComputingSubmission> &submissions, std::size_t threshold_n,
                                const RoundState &round, const std::map<NodeId, Bytes> &registry,
                                const CommitteeSizes &sizes, Rng &supervisor_rng, FlagRegistry &flags) {
  if (threshold_n < 1) throw InvalidArgument("threshold_n must be >= 1");
  Tally tally = tally_lists(submissions, threshold_n, round, registry);

  ValidationResult result;
  for (NodeId id : tally.bad_proof) {
    if (flags.flag(id, FlagCause::bad_proof, round.round_index)) {
      result.flags.push_back({id, round.round_index, FlagCause::bad_proof});
    }
  }
  if (!tally.agreed) {
    throw ConsensusFailure("no contribution list reached count > " + std::to_string(threshold_n));
  }
  for (NodeId id : tally.disagreeing) {
    if (flags.flag(id, FlagCause::bad_list, round.round_index)) {
      result.flags.push_back({id, round.round_index, FlagCause::bad_list});
    }
  }

  const std::set<NodeId> flagged = flags.flagged();
  result.agreed = tally.agreed->without(flagged);

  std::vector<const ComputingSubmission *> agreeing = tally.agreeing;
  std::sort(agreeing.begin(), agreeing.end(),
            [](const ComputingSubmission *a, const ComputingSubmission *b) { return a->node_id < b->node_id; });
  std::vector<std::pair<NodeId, NodeId>> picks;
  for (const auto *s : agreeing) {
    result.agreeing_submitters.push_back(s->node_id);
    if (s->pick_cp != s->pick_cs) picks.emplace_back(s->pick_cp, s->pick_cs);
  }
  std::tie(result.next_cp, result.next_cs) =
      form_committees(result.agreed, picks, sizes, supervisor_rng, flagged, &result.topped_up);
  return result;
}

DispatchMessages dispatch_committee(const RandomSeed &seed_cp, const RandomSeed &seed_cs, const cb::ContributionList &agreed,
                                    const std::vector<NodeId> &next_cp, const std::vector<NodeId> &next_cs) {
  DispatchMessages out;
  for (NodeId id : next_cp) out.to_computing.emplace_back(id, CommitteeDispatch{seed_cp, agreed});
  for (NodeId id : next_cs) out.to_candidates.emplace_back(id, CandidateDispatch{seed_cs});
  return out;
}

std::optional<RoundEndBroadcast> broadcast_round_end(RoundState &round, Tick elapsed, std::size_t accepted_trades) {
  if (round.phase != Phase::trading) return std::nullopt;
  if (elapsed < round.trade_time && accepted_trades < round.trade_limit) return std::nullopt;
  round.phase = Phase::finalizing;
  return RoundEndBroadcast{round.seed_cs, round.candidates_cs, round.committee_cp};
}

std::vector<Proposal> propose_blocks(const RoundState &round, const std::vector<Candidate> &candidates,
                                     const std::vector<chain::Transaction> &mempool, const chain::Chain &chain,
                                     Tick now) {
  std::vector<Proposal> out;
  for (const auto &c : candidates) {
    if (!c.held_seed || !c.keys || !round.candidates_cs.contains(c.id)) continue;
    auto txs = mempool;
    if (c.policy.kind == BehaviorKind::invalid_block_proposer) {
      if (txs.empty()) {
        txs.push_back(chain::Transaction{"forged-" + std::to_string(c.id.value), c.id, c.id, 1.0, 1.0, 1.0,
                                         kMoneyScale, 0});
      } else {
        txs.front().amount += kMoneyScale;
      }
    }
    const auto out_vrf = vrf::evaluate(c.keys->secret_key, c.held_seed->bytes);
    out.push_back(Proposal{c.id, chain::make_block(chain.tip(), std::move(txs), c.id, out_vrf, now)});
  }
  return out;
}

FinalizeResult finalize_block(std::vector<Proposal> proposals, const RoundState &round, chain::Chain &chain,
                              const std::map<NodeId, Bytes> &registry, const std::vector<NodeId> &voters,
                              const Vote &vote, const vrf::KeyPair &supervisor_keys, FlagRegistry &flags, Tick now,
                              cb::ContributionList *ledger, double epsilon) {
  FinalizeResult result;
  auto raise = [&](NodeId id, FlagCause cause) {
    if (flags.flag(id, cause, round.round_index)) result.flags.push_back({id, round.round_index, cause});
  };

  std::vector<Proposal> verified;
  for (auto &p : proposals) {
    auto pk = registry.find(p.proposer);
    const bool ok = pk != registry.end() && round.candidates_cs.contains(p.proposer) && !flags.contains(p.proposer) &&
                    p.block.proposer == p.proposer && vrf::verify(pk->second, round.seed_cs.bytes, p.block.vrf_output());
    if (!ok) {
      raise(p.proposer, FlagCause::bad_proof);
      continue;
    }
    verified.push_back(std::move(p));
  }
  std::sort(verified.begin(), verified.end(), [](const Proposal &a, const Proposal &b) {
    if (a.block.vrf_value != b.block.vrf_value) return a.block.vrf_value > b.block.vrf_value;
    return a.proposer < b.proposer;
  });

  for (auto &p : verified) {
    ++result.attempts;
    std::size_t eligible = 0;
    std::size_t approvals = 0;
    for (NodeId v : voters) {
      if (v == p.proposer || v == kSupervisor || flags.contains(v)) continue;
      ++eligible;
      if (vote(v, p)) ++approvals;
    }
    const bool majority = 2 * approvals > eligible;
    const chain::VrfContext ctx{round.seed_cs.bytes, registry.at(p.proposer)};
    if (!majority || !chain::verify_block(chain, p.block, ctx)) {
      raise(p.proposer, FlagCause::bad_block);
      continue;
    }
    chain.append(p.block, ctx);
    result.block = p.block;
    result.proposer = p.proposer;
    if (ledger && ledger->find(p.proposer)) *ledger = with_reset(*ledger, p.proposer, epsilon);
    return result;
  }

  const auto sup_vrf = vrf::evaluate(supervisor_keys.secret_key, round.seed_cs.bytes);
  auto block = chain::make_block(chain.tip(), {}, kSupervisor, sup_vrf, now);
  chain.append(block, chain::VrfContext{round.seed_cs.bytes, supervisor_keys.public_key});
  result.block = std::move(block);
  result.proposer = kSupervisor;
  result.supervisor_block = true;
  return result;
}

RoundState bootstrap(const std::vector<NodeId> &participants, const CommitteeSizes &sizes, Rng &rng) {
  if (sizes.computing < 1 || sizes.candidates < 1) throw ConfigError("committee sizes must be >= 1");
  if (participants.size() < sizes.computing + sizes.candidates + 1) {
    throw ConfigError("need at least cp + cs + 1 participants");
  }
  std::vector<NodeId> pool = participants;
  std::sort(pool.begin(), pool.end());
  for (std::size_t i = pool.size() - 1; i > 0; --i) {
    std::swap(pool[i], pool[rng.below(i + 1)]);
  }
  RoundState round;
  round.round_index = 0;
  round.committee_cp.insert(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(sizes.computing));
  round.candidates_cs.insert(pool.begin() + static_cast<std::ptrdiff_t>(sizes.computing),
                             pool.begin() + static_cast<std::ptrdiff_t>(sizes.computing + sizes.candidates));
  round.seed_cp = generate_seed(rng, -1, Audience::cp);
  round.seed_cs = generate_seed(rng, -1, Audience::cs);
  round.phase = Phase::computing;
  return round;
}

std::vector<std::pair<NodeId, Role>> replace_flagged_members(RoundState &round, const cb::ContributionList &list,
                                                             const std::set<NodeId> &flagged, Rng &rng) {
  std::vector<std::pair<NodeId, Role>> replaced;
  auto refill = [&](std::set<NodeId> &members, Role role) {
    std::size_t removed = std::erase_if(members, [&](NodeId id) { return flagged.contains(id); });
    if (removed == 0) return;
    std::set<NodeId> exclude = flagged;
    exclude.insert(round.committee_cp.begin(), round.committee_cp.end());
    exclude.insert(round.candidates_cs.begin(), round.candidates_cs.end());
    for (NodeId id : weighted_sample(list, removed, rng, exclude)) {
      members.insert(id);
      replaced.emplace_back(id, role);
    }
  };
  refill(round.committee_cp, Role::computing);
  refill(round.candidates_cs, Role::consensus_candidate);
  return replaced;
}

cb::ContributionList with_reset(const cb::ContributionList &list, NodeId id, double epsilon) {
  std::vector<cb::Entry> entries = list.entries();
  for (auto &e : entries) {
    if (e.node_id == id) e = cb::reset_contribution(std::move(e), epsilon);
  }
  return cb::ContributionList(std::move(entries));
}

}  // namespace poc::consensus
