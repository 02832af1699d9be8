#pragma once

// Small consensus fixtures shared by the unit and acceptance tests.

#include <map>
#include <vector>

#include "poc/consensus.hpp"

namespace poc::testing {

struct Committee {
  std::map<NodeId, vrf::KeyPair> keys;
  std::map<NodeId, Bytes> registry;
  consensus::RoundState round;
  contribution::ContributionList list;

  explicit Committee(std::size_t participants = 10, std::size_t cp = 4, std::size_t cs = 3) {
    std::vector<contribution::Entry> entries;
    for (std::uint32_t i = 1; i <= participants; ++i) {
      NodeId id{i};
      keys[id] = vrf::keygen(to_bytes("fixture-" + std::to_string(i)));
      registry[id] = keys[id].public_key;
      entries.push_back({id, registry[id], static_cast<double>(i), static_cast<double>(i),
                         {{static_cast<double>(i), 0, false}}, 1.0 / i});
    }
    list = contribution::ContributionList(std::move(entries));
    round.round_index = 5;
    Rng rng(17);
    round.seed_cp = consensus::generate_seed(rng, 4, consensus::Audience::cp);
    round.seed_cs = consensus::generate_seed(rng, 4, consensus::Audience::cs);
    for (std::uint32_t i = 1; i <= cp; ++i) round.committee_cp.insert(NodeId{i});
    for (std::uint32_t i = 1; i <= cs; ++i) round.candidates_cs.insert(NodeId{static_cast<std::uint32_t>(cp + i)});
  }

  /// Properly signed submission of `l` by `id`.
  consensus::ComputingSubmission submit(NodeId id, const contribution::ContributionList &l) const {
    consensus::ComputingSubmission s;
    s.node_id = id;
    s.list = l;
    s.vrf = vrf::evaluate(keys.at(id).secret_key, round.seed_cp.bytes);
    Rng picker(vrf::value_prefix(s.vrf.value));
    std::tie(s.pick_cp, s.pick_cs) = consensus::weighted_select(l, picker);
    s.signature = vrf::sign(keys.at(id).secret_key, s.signing_bytes());
    return s;
  }

  /// Same list, but the VRF proof is evaluated on the wrong seed.
  consensus::ComputingSubmission submit_bad_proof(NodeId id, const contribution::ContributionList &l) const {
    auto s = submit(id, l);
    s.vrf = vrf::evaluate(keys.at(id).secret_key, to_bytes("not-the-round-seed"));
    s.signature = vrf::sign(keys.at(id).secret_key, s.signing_bytes());
    return s;
  }

  /// A list differing from `list` in one node's value.
  contribution::ContributionList variant(double bump) const {
    auto entries = list.entries();
    entries.front().value += bump;
    return contribution::ContributionList(std::move(entries));
  }
};

}  // namespace poc::testing
