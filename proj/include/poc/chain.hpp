#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "poc/common.hpp"
#include "poc/vrf.hpp"

namespace poc::chain {

using Hash = std::array<std::uint8_t, 32>;

/// Settlement of one matched trade, recorded on chain.
struct Transaction {
  std::string match_id;
  NodeId seller;
  NodeId buyer;
  double quantity_ordered = 0;
  double quantity_delivered = 0;
  double unit_price = 0;
  Money amount = 0;  // paid to seller
  Money refund = 0;  // returned to buyer

  bool operator==(const Transaction &) const = default;
};

struct Block {
  std::uint64_t height = 0;
  Hash previous_hash{};
  std::vector<Transaction> transactions;
  NodeId proposer;
  vrf::Value vrf_value;
  Bytes vrf_proof;
  Tick timestamp = 0;
  Hash hash{};

  /// Length-prefixed concatenation of every field except `hash`.
  Bytes canonical_bytes() const;
  Hash compute_hash() const;
  void seal() { hash = compute_hash(); }

  vrf::Output vrf_output() const { return vrf::Output{vrf_value, vrf_proof}; }
};

Block genesis();

/// Builds and seals the next block on top of `parent`.
Block make_block(const Block &parent, std::vector<Transaction> txs, NodeId proposer, const vrf::Output &vrf_out,
                 Tick timestamp);

using TransactionCheck = std::function<bool(const Transaction &)>;

struct VrfContext {
  Bytes round_seed;
  Bytes proposer_pk;
};

class Chain {
 public:
  Chain();

  const std::vector<Block> &blocks() const { return blocks_; }
  const Block &tip() const { return blocks_.back(); }
  std::size_t size() const { return blocks_.size(); }

  /// Throws RejectedBlock unless verify_block accepts.
  void append(Block block, const std::optional<VrfContext> &vrf_ctx, const TransactionCheck &check = {});

  /// Writes one JSON object per line, genesis first.
  void dump_ndjson(std::ostream &os) const;

 private:
  std::vector<Block> blocks_;
};

/// Hash, link and height always; VRF evidence when a context is given
/// (PoW-mode blocks carry none); every transaction through `check` if set.
bool verify_block(const Chain &chain, const Block &block, const std::optional<VrfContext> &vrf_ctx,
                  const TransactionCheck &check = {});

/// Re-verifies hashes, links and heights from genesis.
bool audit(const Chain &chain);

std::string hash_hex(const Hash &h);

}  // namespace poc::chain
