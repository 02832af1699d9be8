#pragma once

#include <string>
#include <string_view>

namespace poc {

enum class BehaviorKind { honest, list_forger, invalid_block_proposer, offline_flaky, colluder };

/// How a simulated participant deviates from the protocol.
///  - list_forger: inflates its own entry in every list it computes.
///  - invalid_block_proposer: packs a tampered settlement into its blocks.
///  - offline_flaky: drops each incoming message with `drop_probability`.
///  - colluder: members of one group submit the same forged list and
///    approve each other's blocks.
struct BehaviorPolicy {
  BehaviorKind kind = BehaviorKind::honest;
  double drop_probability = 0.0;
  int group_id = 0;

  static BehaviorPolicy honest() { return {}; }
  static BehaviorPolicy list_forger() { return {BehaviorKind::list_forger}; }
  static BehaviorPolicy invalid_block_proposer() { return {BehaviorKind::invalid_block_proposer}; }
  static BehaviorPolicy offline_flaky(double p) { return {BehaviorKind::offline_flaky, p}; }
  static BehaviorPolicy colluder(int group) { return {BehaviorKind::colluder, 0.0, group}; }

  bool is_honest() const { return kind == BehaviorKind::honest; }
  /// Deviates from the protocol in a way the supervisor or voters can catch.
  bool is_malicious() const {
    return kind == BehaviorKind::list_forger || kind == BehaviorKind::invalid_block_proposer ||
           kind == BehaviorKind::colluder;
  }

  bool operator==(const BehaviorPolicy &) const = default;
};

/// "honest", "list_forger", "invalid_block_proposer", "offline_flaky(0.3)",
/// "colluder(1)".
std::string to_string(const BehaviorPolicy &p);
BehaviorPolicy parse_behavior(std::string_view text);

}  // namespace poc
