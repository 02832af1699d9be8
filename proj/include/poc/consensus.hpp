#pragma once

// Proof-of-contribution round protocol.
//
// Round i, in order:
//   1. Members of the computing committee fold round i-1 activity into the
//      contribution list, evaluate their VRF on R_{i-1}^cp and nominate one
//      computing node and one consensus candidate for round i+1
//      (submit_lists).
//   2. The supervisor verifies proofs, counts identical lists and forms the
//      next committees (validate_lists), then sends <R_i^cp, L> and <R_i^cs>
//      to the new members (dispatch_committee).
//   3. When trading ends it broadcasts <R_{i-1}^cs, cs_i, cp_i>
//      (broadcast_round_end); candidates propose blocks carrying their VRF
//      on R_{i-1}^cs (propose_blocks).
//   4. Inside the window period the largest verified VRF value wins if a
//      strict majority of voters approves; otherwise the next one is tried
//      (finalize_block). The winner's contribution is reset.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "poc/behavior.hpp"
#include "poc/chain.hpp"
#include "poc/common.hpp"
#include "poc/contribution.hpp"
#include "poc/rng.hpp"
#include "poc/vrf.hpp"

namespace poc::consensus {

enum class Role { ordinary, consensus_candidate, computing, supervision };
enum class Audience { cp, cs };
enum class Phase { computing, trading, finalizing, done };

const char *to_string(Role r);
const char *to_string(Phase p);

struct RandomSeed {
  std::int64_t round_index = 0;
  Audience audience = Audience::cp;
  Bytes bytes;

  bool operator==(const RandomSeed &) const = default;
};

/// 32 bytes: SHA-256 over a domain tag, the audience, the round index and 32
/// bytes from the supervisor's generator.
RandomSeed generate_seed(Rng &rng, std::int64_t round_index, Audience audience);

struct CommitteeSizes {
  std::size_t computing = 4;
  std::size_t candidates = 3;
};

struct RoundState {
  std::int64_t round_index = 0;
  RandomSeed seed_cp;  // R_{i-1}^cp, held by committee_cp
  RandomSeed seed_cs;  // R_{i-1}^cs, held by candidates_cs
  std::set<NodeId> committee_cp;
  std::set<NodeId> candidates_cs;
  Tick window_period = 10;
  Tick trade_time = 100;
  std::size_t trade_limit = 100;
  Phase phase = Phase::computing;

  Role role_of(NodeId id) const;
};

enum class FlagCause { bad_list, bad_block, bad_proof };
const char *to_string(FlagCause c);

struct MaliciousFlag {
  NodeId node_id;
  std::int64_t round_detected = 0;
  FlagCause cause = FlagCause::bad_list;

  bool operator==(const MaliciousFlag &) const = default;
};

/// Append-only set of flags; the first flag per node wins.
class FlagRegistry {
 public:
  /// Returns true if the node was not flagged before.
  bool flag(NodeId id, FlagCause cause, std::int64_t round);
  bool contains(NodeId id) const { return by_node_.contains(id); }
  std::set<NodeId> flagged() const;
  const std::vector<MaliciousFlag> &history() const { return history_; }

 private:
  std::map<NodeId, MaliciousFlag> by_node_;
  std::vector<MaliciousFlag> history_;
};

void flag_malicious(FlagRegistry &registry, NodeId id, FlagCause cause, std::int64_t round);

// ---------------------------------------------------------------------------
// Weighted selection

enum class SelectionStrategy {
  roulette,      // prefix-sum sampling without replacement
  literal_scan,  // first entry whose own weight exceeds the draw
};

/// Draws a computing pick then a (different) consensus pick, each with
/// probability proportional to weight among remaining positive-weight
/// entries not in `exclude`. Throws InsufficientCandidates when fewer than
/// two such entries exist.
std::pair<NodeId, NodeId> weighted_select(const contribution::ContributionList &list, Rng &rng,
                                          SelectionStrategy strategy = SelectionStrategy::roulette,
                                          const std::set<NodeId> &exclude = {});

/// `count` distinct weighted draws without replacement.
std::vector<NodeId> weighted_sample(const contribution::ContributionList &list, std::size_t count, Rng &rng,
                                    const std::set<NodeId> &exclude = {});

// ---------------------------------------------------------------------------
// Messages

struct ComputingSubmission {
  NodeId node_id;
  contribution::ContributionList list;
  vrf::Output vrf;
  NodeId pick_cp;
  NodeId pick_cs;
  Bytes signature;

  /// Bytes covered by the signature.
  Bytes signing_bytes() const;
};

struct CommitteeDispatch {  // <R_i^cp, L>
  RandomSeed seed_cp;
  contribution::ContributionList list;
};

struct CandidateDispatch {  // <R_i^cs>
  RandomSeed seed_cs;
};

struct RoundEndBroadcast {  // <R_{i-1}^cs, cs_i, cp_i>
  RandomSeed previous_seed_cs;
  std::set<NodeId> candidates_cs;
  std::set<NodeId> committee_cp;
};

struct DispatchMessages {
  std::vector<std::pair<NodeId, CommitteeDispatch>> to_computing;
  std::vector<std::pair<NodeId, CandidateDispatch>> to_candidates;
};

// ---------------------------------------------------------------------------
// Operations

struct ComputingNode {
  NodeId id;
  const vrf::KeyPair *keys = nullptr;
  BehaviorPolicy policy;
  std::optional<RandomSeed> held_seed;                       // from <R^cp, L>
  const contribution::ContributionList *held_list = nullptr;  // from <R^cp, L>
};

struct ListContext {
  const contribution::RoundActivity *activity = nullptr;  // round i-1; null in the first round
  std::map<NodeId, Bytes> registry;
  std::set<NodeId> flagged;
  contribution::Params params;
  SelectionStrategy selection = SelectionStrategy::roulette;
};

/// Applies the forging rule of a list_forger / colluder to an honest list.
contribution::ContributionList forge_list(const contribution::ContributionList &honest, NodeId forger,
                                          const BehaviorPolicy &policy, const std::set<NodeId> &group);

/// One submission per committee member that holds the round's seed. Members
/// that never received their dispatch do not know they were elected and stay
/// silent. `colluders` maps group id to its members.
std::vector<ComputingSubmission> submit_lists(const RoundState &round, const std::vector<ComputingNode> &members,
                                              const ListContext &ctx,
                                              const std::map<int, std::set<NodeId>> &colluders = {});

struct Tally {
  std::optional<contribution::ContributionList> agreed;
  std::vector<const ComputingSubmission *> agreeing;
  std::vector<NodeId> disagreeing;  // valid proof, different list
  std::vector<NodeId> bad_proof;    // failed VRF, signature or membership
};

/// Proof filtering and identical-list counting; agreement needs a count
/// strictly greater than `threshold_n`.
Tally tally_lists(const std::vector<ComputingSubmission> &submissions, std::size_t threshold_n, const RoundState &round,
                  const std::map<NodeId, Bytes> &registry);

struct ValidationResult {
  contribution::ContributionList agreed;
  std::vector<NodeId> next_cp;
  std::vector<NodeId> next_cs;
  std::vector<MaliciousFlag> flags;
  std::vector<NodeId> agreeing_submitters;
  std::size_t topped_up = 0;
};

/// Flags submitters of failing proofs (bad_proof) and of non-agreeing lists
/// (bad_list), then forms the next committees from agreeing picks, topping
/// up with weighted_select on the agreed list. Throws ConsensusFailure when
/// no list reaches the threshold.
ValidationResult validate_lists(const std::vector<ComputingSubmission> &submissions, std::size_t threshold_n,
                                const RoundState &round, const std::map<NodeId, Bytes> &registry,
                                const CommitteeSizes &sizes, Rng &supervisor_rng, FlagRegistry &flags);

/// Supervisor-side committee formation shared by validate_lists and the
/// consensus-failure fallback.
std::pair<std::vector<NodeId>, std::vector<NodeId>> form_committees(
    const contribution::ContributionList &agreed, const std::vector<std::pair<NodeId, NodeId>> &picks,
    const CommitteeSizes &sizes, Rng &rng, const std::set<NodeId> &excluded, std::size_t *topped_up = nullptr);

DispatchMessages dispatch_committee(const RandomSeed &seed_cp, const RandomSeed &seed_cs,
                                    const contribution::ContributionList &agreed, const std::vector<NodeId> &next_cp,
                                    const std::vector<NodeId> &next_cs);

/// Emits the round-end broadcast once trading time or the trade limit is
/// reached; later calls in the same round return nothing.
std::optional<RoundEndBroadcast> broadcast_round_end(RoundState &round, Tick elapsed, std::size_t accepted_trades);

struct Proposal {
  NodeId proposer;
  chain::Block block;
};

struct Candidate {
  NodeId id;
  const vrf::KeyPair *keys = nullptr;
  BehaviorPolicy policy;
  std::optional<RandomSeed> held_seed;  // R_{i-1}^cs
};

/// Every candidate holding the seed packs the mempool and attaches its VRF
/// output. invalid_block_proposer candidates corrupt one settlement (or add a
/// bogus one to an empty mempool).
std::vector<Proposal> propose_blocks(const RoundState &round, const std::vector<Candidate> &candidates,
                                     const std::vector<chain::Transaction> &mempool, const chain::Chain &chain,
                                     Tick now);

using Vote = std::function<bool(NodeId voter, const Proposal &)>;

struct FinalizeResult {
  chain::Block block;
  NodeId proposer;
  bool supervisor_block = false;
  std::vector<MaliciousFlag> flags;
  std::size_t attempts = 0;
};

/// Verifies proposals (bad_proof on failure), orders them by VRF value
/// descending and appends the first one a strict majority of eligible voters
/// approves; rejected leaders are flagged bad_block. With no acceptable
/// proposal the supervisor appends an empty block under its own VRF. The
/// winner's ledger entry is reset when `ledger` is given.
FinalizeResult finalize_block(std::vector<Proposal> proposals, const RoundState &round, chain::Chain &chain,
                              const std::map<NodeId, Bytes> &registry, const std::vector<NodeId> &voters,
                              const Vote &vote, const vrf::KeyPair &supervisor_keys, FlagRegistry &flags, Tick now,
                              contribution::ContributionList *ledger = nullptr, double epsilon = 1e-6);

/// Uniformly samples disjoint committees for the first round and generates
/// its seeds. Needs participants >= cp + cs + 1.
RoundState bootstrap(const std::vector<NodeId> &participants, const CommitteeSizes &sizes, Rng &rng);

/// Replaces flagged members of the round's committees by weighted draws
/// from `list`. Returns the replacements as (node, role).
std::vector<std::pair<NodeId, Role>> replace_flagged_members(RoundState &round, const contribution::ContributionList &list,
                                                             const std::set<NodeId> &flagged, Rng &rng);

/// Ledger entry of `id` replaced by its reset.
contribution::ContributionList with_reset(const contribution::ContributionList &list, NodeId id, double epsilon);

}  // namespace poc::consensus
