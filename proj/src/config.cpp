#include "poc/config.hpp"

#include <charconv>
#include <fstream>
#include <set>

namespace poc::config {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string &key, const std::string &what) {
  throw ConfigError("config key '" + key + "': " + what);
}

void check_keys(const json &j, const std::string &where, std::initializer_list<const char *> allowed) {
  if (!j.is_object()) bad(where, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto &[k, v] : j.items()) {
    if (!ok.contains(k)) bad(where.empty() ? k : where + "." + k, "unknown key");
  }
}

double number(const json &j, const std::string &key) {
  if (!j.is_number()) bad(key, "expected a number");
  return j.get<double>();
}

template <typename T>
T integer(const json &j, const std::string &key, T lo) {
  if (!j.is_number_integer()) bad(key, "expected an integer");
  auto v = j.get<std::int64_t>();
  if (v < static_cast<std::int64_t>(lo)) bad(key, "must be >= " + std::to_string(lo));
  return static_cast<T>(v);
}

std::string text(const json &j, const std::string &key) {
  if (!j.is_string()) bad(key, "expected a string");
  return j.get<std::string>();
}

void read_params(const json &j, contribution::Params &p) {
  check_keys(j, "params", {"alpha1", "alpha2", "alpha3", "alpha4", "alpha5", "epsilon"});
  if (j.contains("alpha1")) p.alpha1 = number(j["alpha1"], "params.alpha1");
  if (j.contains("alpha2")) p.alpha2 = number(j["alpha2"], "params.alpha2");
  if (j.contains("alpha3")) p.alpha3 = number(j["alpha3"], "params.alpha3");
  if (j.contains("alpha4")) p.alpha4 = number(j["alpha4"], "params.alpha4");
  if (j.contains("alpha5")) p.alpha5 = number(j["alpha5"], "params.alpha5");
  if (j.contains("epsilon")) p.epsilon = number(j["epsilon"], "params.epsilon");
}

void read_market(const json &j, simnet::MarketProfile &m) {
  check_keys(j, "market",
             {"devices", "device_capacity", "consumption_min", "consumption_max", "max_orders_per_round", "ask_min",
              "ask_max", "bid_min", "bid_max", "delivery_reliability", "delivery_window_min", "delivery_window_max",
              "initial_balance", "online_fraction"});
  auto num = [&](const char *k, double &dst) {
    if (j.contains(k)) dst = number(j[k], std::string("market.") + k);
  };
  if (j.contains("devices")) m.devices = integer<std::size_t>(j["devices"], "market.devices", 0);
  if (j.contains("max_orders_per_round")) {
    m.max_orders_per_round = integer<std::size_t>(j["max_orders_per_round"], "market.max_orders_per_round", 1);
  }
  if (j.contains("delivery_window_min")) m.delivery_window_min = integer<Tick>(j["delivery_window_min"], "market.delivery_window_min", 0);
  if (j.contains("delivery_window_max")) m.delivery_window_max = integer<Tick>(j["delivery_window_max"], "market.delivery_window_max", 0);
  num("device_capacity", m.device_capacity);
  num("consumption_min", m.consumption_min);
  num("consumption_max", m.consumption_max);
  num("ask_min", m.ask_min);
  num("ask_max", m.ask_max);
  num("bid_min", m.bid_min);
  num("bid_max", m.bid_max);
  num("delivery_reliability", m.delivery_reliability);
  num("initial_balance", m.initial_balance);
  num("online_fraction", m.online_fraction);
}

}  // namespace

simnet::ScenarioConfig from_json(const json &j, simnet::ScenarioConfig cfg) {
  check_keys(j, "",
             {"name", "node_count", "committee_cp_size", "committee_cs_size", "threshold_n", "rounds", "rng_seed",
              "params", "market", "behaviors", "consensus_mode", "pow_difficulty", "pow_hash_rate", "window_period",
              "trade_time", "trade_limit", "selection"});
  if (j.contains("name")) cfg.name = text(j["name"], "name");
  if (j.contains("node_count")) cfg.node_count = integer<std::size_t>(j["node_count"], "node_count", 1);
  if (j.contains("committee_cp_size")) cfg.sizes.computing = integer<std::size_t>(j["committee_cp_size"], "committee_cp_size", 1);
  if (j.contains("committee_cs_size")) cfg.sizes.candidates = integer<std::size_t>(j["committee_cs_size"], "committee_cs_size", 1);
  if (j.contains("threshold_n")) cfg.threshold_n = integer<std::size_t>(j["threshold_n"], "threshold_n", 1);
  if (j.contains("rounds")) cfg.rounds = integer<std::int64_t>(j["rounds"], "rounds", 1);
  if (j.contains("rng_seed")) cfg.rng_seed = integer<std::uint64_t>(j["rng_seed"], "rng_seed", 0);
  if (j.contains("params")) read_params(j["params"], cfg.params);
  if (j.contains("market")) read_market(j["market"], cfg.market);
  if (j.contains("behaviors")) {
    const auto &b = j["behaviors"];
    if (!b.is_object()) bad("behaviors", "expected an object of node id -> policy");
    cfg.behaviors.clear();
    for (const auto &[k, v] : b.items()) {
      std::uint32_t id = 0;
      auto [ptr, ec] = std::from_chars(k.data(), k.data() + k.size(), id);
      if (ec != std::errc{} || ptr != k.data() + k.size()) bad("behaviors." + k, "node id must be an integer");
      cfg.behaviors[NodeId{id}] = parse_behavior(text(v, "behaviors." + k));
    }
  }
  if (j.contains("consensus_mode")) cfg.consensus_mode = simnet::parse_mode(text(j["consensus_mode"], "consensus_mode"));
  if (j.contains("pow_difficulty")) cfg.pow_difficulty = integer<int>(j["pow_difficulty"], "pow_difficulty", 1);
  if (j.contains("pow_hash_rate")) cfg.pow_hash_rate = number(j["pow_hash_rate"], "pow_hash_rate");
  if (j.contains("window_period")) cfg.window_period = integer<Tick>(j["window_period"], "window_period", 0);
  if (j.contains("trade_time")) cfg.trade_time = integer<Tick>(j["trade_time"], "trade_time", 0);
  if (j.contains("trade_limit")) cfg.trade_limit = integer<std::size_t>(j["trade_limit"], "trade_limit", 1);
  if (j.contains("selection")) {
    auto s = text(j["selection"], "selection");
    if (s == "roulette") {
      cfg.selection = consensus::SelectionStrategy::roulette;
    } else if (s == "literal_scan") {
      cfg.selection = consensus::SelectionStrategy::literal_scan;
    } else {
      bad("selection", "expected roulette or literal_scan");
    }
  }
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json to_json(const simnet::ScenarioConfig &cfg) {
  nlohmann::ordered_json j;
  j["name"] = cfg.name;
  j["node_count"] = cfg.node_count;
  j["committee_cp_size"] = cfg.sizes.computing;
  j["committee_cs_size"] = cfg.sizes.candidates;
  j["threshold_n"] = cfg.threshold_n;
  j["rounds"] = cfg.rounds;
  j["rng_seed"] = cfg.rng_seed;
  j["params"] = {{"alpha1", cfg.params.alpha1}, {"alpha2", cfg.params.alpha2}, {"alpha3", cfg.params.alpha3},
                 {"alpha4", cfg.params.alpha4}, {"alpha5", cfg.params.alpha5}, {"epsilon", cfg.params.epsilon}};
  const auto &m = cfg.market;
  j["market"] = {{"devices", m.devices},
                 {"device_capacity", m.device_capacity},
                 {"consumption_min", m.consumption_min},
                 {"consumption_max", m.consumption_max},
                 {"max_orders_per_round", m.max_orders_per_round},
                 {"ask_min", m.ask_min},
                 {"ask_max", m.ask_max},
                 {"bid_min", m.bid_min},
                 {"bid_max", m.bid_max},
                 {"delivery_reliability", m.delivery_reliability},
                 {"delivery_window_min", m.delivery_window_min},
                 {"delivery_window_max", m.delivery_window_max},
                 {"initial_balance", m.initial_balance},
                 {"online_fraction", m.online_fraction}};
  nlohmann::ordered_json behaviors = nlohmann::ordered_json::object();
  for (const auto &[id, p] : cfg.behaviors) behaviors[std::to_string(id.value)] = to_string(p);
  j["behaviors"] = behaviors;
  j["consensus_mode"] = simnet::to_string(cfg.consensus_mode);
  j["pow_difficulty"] = cfg.pow_difficulty;
  j["pow_hash_rate"] = cfg.pow_hash_rate;
  j["window_period"] = cfg.window_period;
  j["trade_time"] = cfg.trade_time;
  j["trade_limit"] = cfg.trade_limit;
  j["selection"] = cfg.selection == consensus::SelectionStrategy::roulette ? "roulette" : "literal_scan";
  return j;
}

simnet::ScenarioConfig load_file(const std::filesystem::path &path, simnet::ScenarioConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return from_json(j, std::move(base));
}

}  // namespace poc::config
