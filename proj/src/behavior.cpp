#include "poc/behavior.hpp"

#include "poc/common.hpp"

namespace poc {

std::string to_string(const BehaviorPolicy &p) {
  switch (p.kind) {
    case BehaviorKind::honest: return "honest";
    case BehaviorKind::list_forger: return "list_forger";
    case BehaviorKind::invalid_block_proposer: return "invalid_block_proposer";
    case BehaviorKind::offline_flaky: return "offline_flaky(" + format_double(p.drop_probability) + ")";
    case BehaviorKind::colluder: return "colluder(" + std::to_string(p.group_id) + ")";
  }
  return "honest";
}

namespace {
std::string_view argument_of(std::string_view text, std::string_view name) {
  if (text.size() < name.size() + 2 || text.substr(0, name.size()) != name || text[name.size()] != '(' ||
      text.back() != ')') {
    throw ConfigError("malformed behavior: " + std::string(text));
  }
  return text.substr(name.size() + 1, text.size() - name.size() - 2);
}
}  // namespace

BehaviorPolicy parse_behavior(std::string_view text) {
  if (text == "honest") return BehaviorPolicy::honest();
  if (text == "list_forger") return BehaviorPolicy::list_forger();
  if (text == "invalid_block_proposer") return BehaviorPolicy::invalid_block_proposer();
  try {
    if (text.starts_with("offline_flaky")) {
      double p = parse_double(argument_of(text, "offline_flaky"));
      if (!(p >= 0 && p <= 1)) throw ConfigError("offline_flaky probability must be in [0, 1]");
      return BehaviorPolicy::offline_flaky(p);
    }
    if (text.starts_with("colluder")) {
      double g = parse_double(argument_of(text, "colluder"));
      return BehaviorPolicy::colluder(static_cast<int>(g));
    }
  } catch (const InvalidArgument &e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown behavior: " + std::string(text));
}

}  // namespace poc
