#include "poc/chain.hpp"

#include <bit>
#include <cstring>
#include <ostream>

#include <nlohmann/json.hpp>

namespace poc::chain {

namespace {

class Writer {
 public:
  void u64(std::uint64_t v) {
    for (int i = 7; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(ByteView b) {
    u64(b.size());
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void str(std::string_view s) {
    u64(s.size());
    out_.insert(out_.end(), s.begin(), s.end());
  }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

}  // namespace

Bytes Block::canonical_bytes() const {
  Writer w;
  w.u64(height);
  w.bytes(previous_hash);
  w.u64(transactions.size());
  for (const auto &tx : transactions) {
    w.str(tx.match_id);
    w.u64(tx.seller.value);
    w.u64(tx.buyer.value);
    w.f64(tx.quantity_ordered);
    w.f64(tx.quantity_delivered);
    w.f64(tx.unit_price);
    w.u64(static_cast<std::uint64_t>(tx.amount));
    w.u64(static_cast<std::uint64_t>(tx.refund));
  }
  w.u64(proposer.value);
  w.bytes(vrf_value.bytes);
  w.bytes(vrf_proof);
  w.u64(static_cast<std::uint64_t>(timestamp));
  return w.take();
}

Hash Block::compute_hash() const { return vrf::sha256(canonical_bytes()); }

Block genesis() {
  Block g;
  g.seal();
  return g;
}

Block make_block(const Block &parent, std::vector<Transaction> txs, NodeId proposer, const vrf::Output &vrf_out,
                 Tick timestamp) {
  Block b;
  b.height = parent.height + 1;
  b.previous_hash = parent.hash;
  b.transactions = std::move(txs);
  b.proposer = proposer;
  b.vrf_value = vrf_out.value;
  b.vrf_proof = vrf_out.proof;
  b.timestamp = timestamp;
  b.seal();
  return b;
}

Chain::Chain() { blocks_.push_back(genesis()); }

bool verify_block(const Chain &chain, const Block &block, const std::optional<VrfContext> &vrf_ctx,
                  const TransactionCheck &check) {
  if (block.compute_hash() != block.hash) return false;
  const Block &tip = chain.tip();
  if (block.height != tip.height + 1) return false;
  if (block.previous_hash != tip.hash) return false;
  if (vrf_ctx && !vrf::verify(vrf_ctx->proposer_pk, vrf_ctx->round_seed, block.vrf_output())) return false;
  if (check) {
    for (const auto &tx : block.transactions) {
      if (!check(tx)) return false;
    }
  }
  return true;
}

void Chain::append(Block block, const std::optional<VrfContext> &vrf_ctx, const TransactionCheck &check) {
  if (!verify_block(*this, block, vrf_ctx, check)) {
    throw RejectedBlock("block at height " + std::to_string(block.height) + " failed verification");
  }
  blocks_.push_back(std::move(block));
}

bool audit(const Chain &chain) {
  const auto &blocks = chain.blocks();
  if (blocks.empty() || blocks.front().hash != genesis().hash) return false;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto &b = blocks[i];
    if (b.height != i || b.compute_hash() != b.hash) return false;
    if (i > 0 && b.previous_hash != blocks[i - 1].hash) return false;
  }
  return true;
}

std::string hash_hex(const Hash &h) { return to_hex(h); }

void Chain::dump_ndjson(std::ostream &os) const {
  for (const auto &b : blocks_) {
    nlohmann::ordered_json j;
    j["height"] = b.height;
    j["hash"] = hash_hex(b.hash);
    j["previous_hash"] = hash_hex(b.previous_hash);
    j["proposer"] = b.proposer.value;
    j["timestamp"] = b.timestamp;
    j["vrf_value"] = to_hex(b.vrf_value.bytes);
    j["vrf_proof"] = to_hex(b.vrf_proof);
    auto txs = nlohmann::ordered_json::array();
    for (const auto &tx : b.transactions) {
      txs.push_back({{"match_id", tx.match_id},
                     {"seller", tx.seller.value},
                     {"buyer", tx.buyer.value},
                     {"quantity_ordered", tx.quantity_ordered},
                     {"quantity_delivered", tx.quantity_delivered},
                     {"unit_price", tx.unit_price},
                     {"amount", tx.amount},
                     {"refund", tx.refund}});
    }
    j["transactions"] = std::move(txs);
    os << j.dump() << '\n';
  }
}

}  // namespace poc::chain
