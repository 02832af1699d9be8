#include "poc/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace poc::simnet {

namespace cb = poc::contribution;
namespace cs = poc::consensus;

// ---------------------------------------------------------------------------
// Network

void Network::add_node(NodeId id, double drop_probability) {
  if (!(drop_probability >= 0 && drop_probability <= 1)) throw InvalidArgument("drop probability must be in [0, 1]");
  drop_[id] = drop_probability;
}

void Network::advance_to(Tick t) {
  if (t < now_) throw InvalidArgument("network clock cannot go backwards");
  now_ = t;
}

void Network::deliver(Message message, NodeId from, NodeId to) {
  auto it = drop_.find(to);
  if (it == drop_.end() || !drop_.contains(from)) {
    throw RoutingError("unknown route " + std::to_string(from.value) + " -> " + std::to_string(to.value));
  }
  if (it->second > 0 && rng_.bernoulli(it->second)) {
    ++dropped_;
    return;
  }
  queue_.push_back(Envelope{now_ + 1, sequence_++, from, to, std::move(message)});
}

std::vector<Envelope> Network::poll() {
  std::vector<Envelope> out;
  while (!queue_.empty() && queue_.front().deliver_at <= now_) {
    out.push_back(std::move(queue_.front()));
    queue_.pop_front();
    ++delivered_;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

const char *to_string(ConsensusMode m) { return m == ConsensusMode::poc ? "poc" : "pow"; }

ConsensusMode parse_mode(std::string_view s) {
  if (s == "poc") return ConsensusMode::poc;
  if (s == "pow") return ConsensusMode::pow;
  throw ConfigError("unknown consensus mode: " + std::string(s));
}

void ScenarioConfig::validate() const {
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (sizes.computing < 1 || sizes.candidates < 1) throw ConfigError("committee sizes must be >= 1");
  if (node_count < sizes.computing + sizes.candidates + 1) {
    throw ConfigError("node_count must be >= committee_cp_size + committee_cs_size + 1");
  }
  if (threshold_n < 1) throw ConfigError("threshold_n must be >= 1");
  if (threshold_n >= sizes.computing) throw ConfigError("threshold_n must be below the computing committee size");
  if (pow_difficulty < 1 || pow_difficulty > 62) throw ConfigError("pow_difficulty must be in [1, 62]");
  if (!(pow_hash_rate > 0)) throw ConfigError("pow_hash_rate must be > 0");
  if (window_period < 2) throw ConfigError("window_period must be >= 2 ticks");
  if (trade_time < 4) throw ConfigError("trade_time must be >= 4 ticks");
  if (trade_limit < 1) throw ConfigError("trade_limit must be >= 1");
  try {
    params.validate();
  } catch (const InvalidArgument &e) {
    throw ConfigError(e.what());
  }
  const auto &m = market;
  if (m.device_capacity < 0 || m.consumption_min < 0 || m.consumption_max < m.consumption_min) {
    throw ConfigError("market profile: bad generation/consumption range");
  }
  if (m.max_orders_per_round < 1) throw ConfigError("market profile: max_orders_per_round must be >= 1");
  if (!(m.ask_min > 0) || m.ask_max < m.ask_min || !(m.bid_min > 0) || m.bid_max < m.bid_min) {
    throw ConfigError("market profile: bad price range");
  }
  if (m.delivery_reliability < 0 || m.delivery_reliability > 1) throw ConfigError("market profile: bad reliability");
  if (m.delivery_window_min < 0 || m.delivery_window_max < m.delivery_window_min) {
    throw ConfigError("market profile: bad delivery window");
  }
  if (m.initial_balance < 0) throw ConfigError("market profile: negative initial balance");
  if (m.online_fraction < 0 || m.online_fraction > 1) throw ConfigError("market profile: bad online fraction");
  for (const auto &[id, policy] : behaviors) {
    if (id == kSupervisor) throw ConfigError("the supervision node is always honest");
    if (id.value < 1 || id.value > node_count) throw ConfigError("behavior assigned to unknown node " + std::to_string(id.value));
    if (policy.kind == BehaviorKind::offline_flaky && !(policy.drop_probability >= 0 && policy.drop_probability <= 1)) {
      throw ConfigError("offline_flaky probability must be in [0, 1]");
    }
  }
}

BehaviorPolicy ScenarioConfig::behavior_of(NodeId id) const {
  auto it = behaviors.find(id);
  return it == behaviors.end() ? BehaviorPolicy::honest() : it->second;
}

std::vector<double> SimulationMetrics::block_times() const {
  std::vector<double> out;
  out.reserve(rounds.size());
  for (const auto &r : rounds) out.push_back(r.block_time);
  return out;
}

// ---------------------------------------------------------------------------
// PoW baseline

double pow_baseline_round(int difficulty, Rng &rng, double hash_rate) {
  if (difficulty < 1 || difficulty > 62) throw InvalidArgument("difficulty must be in [1, 62]");
  if (!(hash_rate > 0)) throw InvalidArgument("hash rate must be > 0");
  std::uint64_t attempts = 0;
  if (difficulty <= 24) {
    // Each attempt draws a fresh 64-bit digest; success iff its top
    // `difficulty` bits are zero.
    const int shift = 64 - difficulty;
    do {
      ++attempts;
    } while ((rng.next() >> shift) != 0);
  } else {
    // Same geometric law by inversion, for difficulties too costly to loop.
    const double p = std::ldexp(1.0, -difficulty);
    const double u = rng.uniform();
    attempts = static_cast<std::uint64_t>(std::ceil(std::log1p(-u) / std::log1p(-p)));
    attempts = std::max<std::uint64_t>(attempts, 1);
  }
  return static_cast<double>(attempts) / hash_rate;
}

std::uint64_t pow_mine(ByteView header, int difficulty, std::uint64_t *nonce_out) {
  if (difficulty < 1 || difficulty > 32) throw InvalidArgument("real mining supports difficulty in [1, 32]");
  Bytes buf(header.begin(), header.end());
  buf.resize(header.size() + 8);
  for (std::uint64_t nonce = 0;; ++nonce) {
    for (int i = 0; i < 8; ++i) buf[header.size() + i] = static_cast<std::uint8_t>(nonce >> (8 * (7 - i)));
    auto digest = vrf::sha256(buf);
    std::uint32_t top = (std::uint32_t{digest[0]} << 24) | (std::uint32_t{digest[1]} << 16) |
                        (std::uint32_t{digest[2]} << 8) | std::uint32_t{digest[3]};
    if ((top >> (32 - difficulty)) == 0) {
      if (nonce_out) *nonce_out = nonce;
      return nonce + 1;
    }
  }
}

int difficulty_for_mean(double mean) {
  if (!(mean >= 1)) return 1;
  return std::clamp(static_cast<int>(std::lround(std::log2(mean))), 1, 62);
}

// ---------------------------------------------------------------------------
// Simulator

namespace {

struct PlannedOrder {
  Tick at = 0;
  market::Order order;
};

struct PendingDelivery {
  Tick at = 0;
  std::string match_id;
  double quantity = 0;
};

struct Participant {
  NodeId id;
  vrf::KeyPair keys;
  BehaviorPolicy policy;
  Rng rng;
  std::map<std::int64_t, cs::CommitteeDispatch> cp_dispatch;  // keyed by seed round
  std::map<std::int64_t, cs::CandidateDispatch> cs_dispatch;
  std::optional<std::int64_t> round_end_seen;

  // Per-round draws.
  cb::GenerationReport generation;
  Tick online_offset = 0;
};

class Simulator {
 public:
  explicit Simulator(const ScenarioConfig &config) : cfg_(config), net_(config.rng_seed ^ 0x6e6574ULL) {
    cfg_.validate();
    Rng root(cfg_.rng_seed);
    sup_rng_ = root.fork(0);
    pow_rng_ = root.fork(1);
    const std::string seed_tag = std::to_string(cfg_.rng_seed);
    supervisor_keys_ = vrf::keygen(to_bytes("poc-supervisor/" + seed_tag));
    net_.add_node(kSupervisor);

    for (std::uint32_t i = 1; i <= cfg_.node_count; ++i) {
      NodeId id{i};
      Participant p;
      p.id = id;
      p.keys = vrf::keygen(to_bytes("poc-node/" + seed_tag + "/" + std::to_string(i)));
      p.policy = cfg_.behavior_of(id);
      p.rng = root.fork(100 + i);
      registry_[id] = p.keys.public_key;
      const double drop = p.policy.kind == BehaviorKind::offline_flaky ? p.policy.drop_probability : 0.0;
      net_.add_node(id, drop);
      market_.open_account(id, static_cast<Money>(std::llround(cfg_.market.initial_balance * kMoneyScale)));
      if (p.policy.kind == BehaviorKind::colluder) colluders_[p.policy.group_id].insert(id);
      participants_.emplace(id, std::move(p));
      ids_.push_back(id);
    }
    pks_with_supervisor_ = registry_;
    pks_with_supervisor_[kSupervisor] = supervisor_keys_.public_key;

    metrics_.scenario = cfg_.name;
    metrics_.mode = cfg_.consensus_mode;
    metrics_.rng_seed = cfg_.rng_seed;
    metrics_.node_count = cfg_.node_count;
    metrics_.behaviors = cfg_.behaviors;
    metrics_.pow_difficulty = cfg_.pow_difficulty;
    metrics_.funds_initial = market_.total_funds();
    for (NodeId id : ids_) metrics_.counts[id];
  }

  RunArtifacts run() {
    if (cfg_.consensus_mode == ConsensusMode::poc) {
      start_poc();
      for (std::int64_t r = 0; r < cfg_.rounds; ++r) poc_round(r);
    } else {
      for (std::int64_t r = 0; r < cfg_.rounds; ++r) pow_round(r);
    }
    metrics_.flags = flags_.history();
    metrics_.funds_final = market_.total_funds();
    metrics_.chain_audit_ok = chain::audit(chain_);
    metrics_.chain_height = chain_.tip().height;
    if (!metrics_.chain_audit_ok) throw InvariantViolation("chain audit failed");
    return RunArtifacts{std::move(metrics_), std::move(chain_)};
  }

 private:
  // -- setup ---------------------------------------------------------------

  void start_poc() {
    round_ = cs::bootstrap(ids_, cfg_.sizes, sup_rng_);
    round_.window_period = cfg_.window_period;
    round_.trade_time = cfg_.trade_time;
    round_.trade_limit = cfg_.trade_limit;
    ledger_ = cb::initial_list(registry_);
    dispatched_list_ = ledger_;
    auto msgs = cs::dispatch_committee(round_.seed_cp, round_.seed_cs, ledger_,
                                       {round_.committee_cp.begin(), round_.committee_cp.end()},
                                       {round_.candidates_cs.begin(), round_.candidates_cs.end()});
    send_dispatch(msgs);
  }

  void send_dispatch(const cs::DispatchMessages &msgs) {
    for (const auto &[to, m] : msgs.to_computing) net_.deliver(m, kSupervisor, to);
    for (const auto &[to, m] : msgs.to_candidates) net_.deliver(m, kSupervisor, to);
  }

  // -- message handling ----------------------------------------------------

  void pump(Tick t) {
    net_.advance_to(t);
    for (auto &env : net_.poll()) handle(env);
  }

  void handle(Envelope &env) {
    if (!std::holds_alternative<OrderNotice>(env.message)) ++round_consensus_messages_;
    if (env.to == kSupervisor) {
      if (auto *s = std::get_if<cs::ComputingSubmission>(&env.message)) {
        submissions_.push_back(std::move(*s));
      } else if (auto *p = std::get_if<cs::Proposal>(&env.message)) {
        proposals_.push_back(std::move(*p));
      } else if (auto *o = std::get_if<OrderNotice>(&env.message)) {
        auto res = market_.submit_order(o->order);
        ++round_market_events_;
        if (res.accepted) ++round_orders_;
      }
      return;
    }
    auto &node = participants_.at(env.to);
    if (auto *d = std::get_if<cs::CommitteeDispatch>(&env.message)) {
      node.cp_dispatch.insert_or_assign(d->seed_cp.round_index, std::move(*d));
    } else if (auto *c = std::get_if<cs::CandidateDispatch>(&env.message)) {
      node.cs_dispatch.insert_or_assign(c->seed_cs.round_index, std::move(*c));
    } else if (auto *b = std::get_if<cs::RoundEndBroadcast>(&env.message)) {
      node.round_end_seen = b->previous_seed_cs.round_index + 1;
    }
  }

  // -- per-round trading ---------------------------------------------------

  void draw_round_profile(std::int64_t r, Tick t0) {
    planned_orders_.clear();
    const auto &m = cfg_.market;
    for (NodeId id : ids_) {
      auto &p = participants_.at(id);
      p.generation.device_outputs.clear();
      double generated = 0;
      for (std::size_t d = 0; d < m.devices; ++d) {
        double out = m.device_capacity * p.rng.uniform();
        p.generation.device_outputs.push_back(out);
        generated += out;
      }
      double fraction = m.online_fraction;
      if (p.policy.kind == BehaviorKind::offline_flaky) fraction *= 1.0 - p.policy.drop_probability;
      const auto slack = static_cast<std::uint64_t>((1.0 - fraction) * static_cast<double>(cfg_.trade_time));
      p.online_offset = static_cast<Tick>(slack == 0 ? 0 : p.rng.below(slack + 1));

      const double consumption = p.rng.uniform(m.consumption_min, m.consumption_max);
      const double net = generated - consumption;
      const std::size_t k = 1 + p.rng.below(m.max_orders_per_round);
      if (std::abs(net) < 0.05) continue;
      const auto side = net > 0 ? market::Side::sell : market::Side::buy;
      for (std::size_t j = 0; j < k; ++j) {
        market::Order o;
        o.order_id = "r" + std::to_string(r) + "-n" + std::to_string(id.value) + "-" + std::to_string(j);
        o.side = side;
        o.owner = id;
        o.quantity = std::abs(net) / static_cast<double>(k);
        o.unit_price = side == market::Side::sell ? p.rng.uniform(m.ask_min, m.ask_max)
                                                  : p.rng.uniform(m.bid_min, m.bid_max);
        // Orders post during the trading window, after the computing
        // committee has had a tick to submit.
        const Tick at = t0 + 1 + static_cast<Tick>(p.rng.below(static_cast<std::uint64_t>(cfg_.trade_time - 1)));
        o.submitted_at = at + 1;  // reaches the platform one tick later
        const auto span = static_cast<std::uint64_t>(m.delivery_window_max - m.delivery_window_min + 1);
        o.latest_delivery = o.submitted_at + m.delivery_window_min + static_cast<Tick>(p.rng.below(span));
        planned_orders_.push_back(PlannedOrder{at, std::move(o)});
      }
    }
    std::stable_sort(planned_orders_.begin(), planned_orders_.end(),
                     [](const PlannedOrder &a, const PlannedOrder &b) { return a.at < b.at; });
    next_order_ = 0;
  }

  void post_orders(Tick t) {
    while (next_order_ < planned_orders_.size() && planned_orders_[next_order_].at <= t) {
      auto &po = planned_orders_[next_order_++];
      net_.deliver(OrderNotice{po.order}, po.order.owner, kSupervisor);
    }
  }

  void match_and_deliver(Tick t) {
    auto priority = market::Priority::from_list(ledger_, flags_.flagged());
    auto outcome = market_.run_matching(priority, t);
    metrics_.priority_checks += outcome.audit.checked_pairs;
    metrics_.priority_violations += outcome.audit.violations;
    for (const auto &mid : outcome.match_ids) {
      ++round_matches_;
      ++round_market_events_;
      round_match_ids_.push_back(mid);
      const auto &m = market_.match(mid);
      auto &seller = participants_.at(m.seller);
      const Tick span = std::max<Tick>(1, m.latest_delivery - t);
      const Tick at = t + 1 + static_cast<Tick>(seller.rng.below(static_cast<std::uint64_t>(span)));
      double qty = m.quantity;
      if (!seller.rng.bernoulli(cfg_.market.delivery_reliability)) qty *= seller.rng.uniform(0.3, 1.0);
      deliveries_.push_back(PendingDelivery{std::min(at, m.latest_delivery), mid, qty});
    }
    execute_deliveries(t, false);
  }

  void execute_deliveries(Tick t, bool flush) {
    std::vector<PendingDelivery> keep;
    for (auto &d : deliveries_) {
      if (flush || d.at <= t) {
        market_.record_delivery(d.match_id, d.quantity, t);
        ++round_market_events_;
      } else {
        keep.push_back(std::move(d));
      }
    }
    deliveries_ = std::move(keep);
  }

  std::vector<chain::Transaction> settle_round(Tick t_end) {
    execute_deliveries(t_end, true);
    std::vector<chain::Transaction> mempool;
    for (const auto &mid : round_match_ids_) {
      mempool.push_back(market_.settle(mid, t_end));
      ++round_market_events_;
    }
    round_match_ids_.clear();
    market_.expire_orders(std::numeric_limits<Tick>::max());
    if (market_.total_funds() != metrics_.funds_initial) {
      throw InvariantViolation("account conservation violated after settlement");
    }
    return mempool;
  }

  void reset_round_counters() {
    submissions_.clear();
    proposals_.clear();
    deliveries_.clear();
    round_match_ids_.clear();
    round_orders_ = 0;
    round_matches_ = 0;
    round_market_events_ = 0;
    round_votes_ = 0;
    round_consensus_messages_ = 0;
  }

  cb::RoundActivity collect_activity(std::int64_t r, Tick t0, Tick t_end,
                                     const std::vector<NodeId> &computing_served, NodeId proposer,
                                     std::size_t packaged) {
    cb::RoundActivity act;
    act.round_index = r;
    for (NodeId id : ids_) {
      auto &p = participants_.at(id);
      auto &na = act.nodes[id];
      na.generation = p.generation;
      na.session = cb::OnlineSession{std::min(t_end, t0 + p.online_offset), t_end};
    }
    for (const auto &rec : market_.trade_records()) {
      act.nodes[market_.order(rec.order_id).owner].trades.push_back(rec);
    }
    for (NodeId id : computing_served) {
      act.nodes[id].service = cb::ConsensusService{cb::ServiceRole::computing, 0,
                                                   static_cast<std::int64_t>(cfg_.node_count)};
    }
    if (proposer != kSupervisor) {
      auto &na = act.nodes[proposer];
      na.service = cb::ConsensusService{cb::ServiceRole::consensus, static_cast<std::int64_t>(packaged),
                                        static_cast<std::int64_t>(cfg_.node_count)};
      na.proposer_reset = true;
    }
    return act;
  }

  // -- PoC -----------------------------------------------------------------

  void check_committees(std::int64_t r) {
    const auto flagged = flags_.flagged();
    if (round_.committee_cp.size() != cfg_.sizes.computing || round_.candidates_cs.size() != cfg_.sizes.candidates) {
      throw InvariantViolation("round " + std::to_string(r) + ": committee size mismatch");
    }
    for (NodeId id : round_.committee_cp) {
      if (round_.candidates_cs.contains(id)) throw InvariantViolation("committees overlap");
      if (id == kSupervisor) throw InvariantViolation("supervisor in computing committee");
      if (flagged.contains(id)) throw InvariantViolation("flagged node in computing committee");
    }
    for (NodeId id : round_.candidates_cs) {
      if (id == kSupervisor) throw InvariantViolation("supervisor among candidates");
      if (flagged.contains(id)) throw InvariantViolation("flagged node among candidates");
    }
  }

  void poc_round(std::int64_t r) {
    reset_round_counters();
    const Tick t0 = net_.now();
    const std::uint64_t delivered0 = net_.delivered();
    RoundTrace trace;
    trace.round = r;
    round_.round_index = r;
    round_.phase = cs::Phase::computing;

    // Members flagged after their election are replaced before they act.
    for (const auto &[id, role] : cs::replace_flagged_members(round_, ledger_, flags_.flagged(), sup_rng_)) {
      if (role == cs::Role::computing) {
        net_.deliver(cs::CommitteeDispatch{round_.seed_cp, dispatched_list_}, kSupervisor, id);
      } else {
        net_.deliver(cs::CandidateDispatch{round_.seed_cs}, kSupervisor, id);
      }
      ++trace.topped_up;
    }
    check_committees(r);
    trace.committee_cp.assign(round_.committee_cp.begin(), round_.committee_cp.end());
    trace.candidates_cs.assign(round_.candidates_cs.begin(), round_.candidates_cs.end());
    for (NodeId id : round_.committee_cp) ++metrics_.counts[id].computing;
    for (NodeId id : round_.candidates_cs) ++metrics_.counts[id].candidate;

    market_.begin_round(r);
    draw_round_profile(r, t0);

    std::optional<cs::ValidationResult> validation;
    cs::RandomSeed next_seed_cp;
    cs::RandomSeed next_seed_cs;
    std::vector<NodeId> next_cp;
    std::vector<NodeId> next_cs;
    std::vector<NodeId> computing_served;
    bool validated = false;

    Tick t = t0;
    while (true) {
      ++t;
      pump(t);

      if (t == t0 + 1) submit_computing_lists(r);

      if (!validated) {
        std::set<NodeId> from;
        for (const auto &s : submissions_) from.insert(s.node_id);
        const bool all_in = std::includes(from.begin(), from.end(), round_.committee_cp.begin(), round_.committee_cp.end());
        if (all_in || t >= t0 + 3) {
          next_seed_cp = cs::generate_seed(sup_rng_, r, cs::Audience::cp);
          next_seed_cs = cs::generate_seed(sup_rng_, r, cs::Audience::cs);
          try {
            validation = cs::validate_lists(submissions_, cfg_.threshold_n, round_, registry_, cfg_.sizes, sup_rng_, flags_);
            for (const auto &f : validation->flags) trace.flags.push_back(f);
            ledger_ = validation->agreed;
            next_cp = validation->next_cp;
            next_cs = validation->next_cs;
            computing_served = validation->agreeing_submitters;
            trace.topped_up += validation->topped_up;
          } catch (const ConsensusFailure &) {
            // Fall back to the previous agreed list; the supervisor draws
            // both committees itself.
            trace.consensus_failure = true;
            ++metrics_.consensus_failures;
            for (const auto &f : flags_.history()) {
              if (f.round_detected == r) trace.flags.push_back(f);
            }
            ledger_ = ledger_.without(flags_.flagged());
            std::tie(next_cp, next_cs) =
                cs::form_committees(ledger_, {}, cfg_.sizes, sup_rng_, flags_.flagged(), &trace.topped_up);
          }
          dispatched_list_ = ledger_;
          send_dispatch(cs::dispatch_committee(next_seed_cp, next_seed_cs, ledger_, next_cp, next_cs));
          round_.phase = cs::Phase::trading;
          validated = true;
        }
      }

      post_orders(t);
      match_and_deliver(t);

      if (auto msg = cs::broadcast_round_end(round_, t - t0, round_matches_)) {
        for (NodeId id : ids_) net_.deliver(*msg, kSupervisor, id);
        break;
      }
    }
    const Tick t_end = t;
    auto mempool = settle_round(t_end);

    // Candidates that saw the broadcast stop packing and propose.
    pump(t_end + 1);
    std::vector<cs::Candidate> candidates;
    for (NodeId id : round_.candidates_cs) {
      auto &p = participants_.at(id);
      cs::Candidate c{id, &p.keys, p.policy, std::nullopt};
      auto it = p.cs_dispatch.find(r - 1);
      if (it != p.cs_dispatch.end() && p.round_end_seen == r) c.held_seed = it->second.seed_cs;
      candidates.push_back(std::move(c));
    }
    for (auto &prop : cs::propose_blocks(round_, candidates, mempool, chain_, t_end + 1)) {
      net_.deliver(std::move(prop), prop.proposer, kSupervisor);
    }
    pump(t_end + 2);

    const Tick t_final = t_end + cfg_.window_period;
    net_.advance_to(t_final);
    auto result = finalize(r, t_final);
    for (const auto &f : result.flags) trace.flags.push_back(f);

    trace.proposer = result.proposer;
    trace.supervisor_block = result.supervisor_block;
    trace.block_hash = chain::hash_hex(result.block.hash);
    trace.tx_count = result.block.transactions.size();
    if (result.supervisor_block) {
      ++metrics_.supervisor_blocks;
    } else {
      ++metrics_.counts[result.proposer].proposer;
      if (!round_.candidates_cs.contains(result.proposer)) throw InvariantViolation("proposer was not a candidate");
      if (const auto *e = ledger_.find(result.proposer); e && e->value != 0.0) {
        throw InvariantViolation("proposer contribution not reset after finalization");
      }
    }

    last_activity_ = collect_activity(r, t0, t_end, computing_served, result.proposer, trace.tx_count);

    trace.orders = round_orders_;
    trace.matches = round_matches_;
    trace.ticks = t_final - t0;
    trace.events = (net_.delivered() - delivered0) + round_votes_ + round_market_events_;
    // Trading runs identically under both modes, so only the work that
    // turns a mempool into a block counts towards block time.
    trace.block_time = static_cast<double>(round_consensus_messages_ + round_votes_ + trace.tx_count);
    for (const auto &e : ledger_.entries()) {
      metrics_.series.push_back(NodeSample{r, e.node_id, e.value, e.energy_value, e.weight});
    }
    metrics_.rounds.push_back(std::move(trace));

    // Next round.
    round_.phase = cs::Phase::done;
    cs::RoundState next;
    next.round_index = r + 1;
    next.seed_cp = next_seed_cp;
    next.seed_cs = next_seed_cs;
    next.committee_cp.insert(next_cp.begin(), next_cp.end());
    next.candidates_cs.insert(next_cs.begin(), next_cs.end());
    next.window_period = cfg_.window_period;
    next.trade_time = cfg_.trade_time;
    next.trade_limit = cfg_.trade_limit;
    round_ = std::move(next);

    for (auto &[id, p] : participants_) {
      std::erase_if(p.cp_dispatch, [r](const auto &kv) { return kv.first < r; });
      std::erase_if(p.cs_dispatch, [r](const auto &kv) { return kv.first < r; });
    }
  }

  void submit_computing_lists(std::int64_t r) {
    std::vector<cs::ComputingNode> members;
    for (NodeId id : round_.committee_cp) {
      auto &p = participants_.at(id);
      cs::ComputingNode m{id, &p.keys, p.policy, std::nullopt, nullptr};
      if (auto it = p.cp_dispatch.find(r - 1); it != p.cp_dispatch.end()) {
        m.held_seed = it->second.seed_cp;
        m.held_list = &it->second.list;
      }
      members.push_back(m);
    }
    cs::ListContext ctx;
    ctx.activity = last_activity_ ? &*last_activity_ : nullptr;
    ctx.registry = registry_;
    ctx.flagged = flags_.flagged();
    ctx.params = cfg_.params;
    ctx.selection = cfg_.selection;
    for (auto &s : cs::submit_lists(round_, members, ctx, colluders_)) {
      NodeId from = s.node_id;
      net_.deliver(std::move(s), from, kSupervisor);
    }
  }

  cs::FinalizeResult finalize(std::int64_t r, Tick now) {
    std::map<NodeId, bool> honest_verdict;
    auto vote = [&](NodeId voter, const cs::Proposal &p) -> bool {
      ++round_votes_;
      const auto &v = participants_.at(voter);
      if (v.policy.kind == BehaviorKind::offline_flaky && participants_.at(voter).rng.bernoulli(v.policy.drop_probability)) {
        return false;  // missed the window
      }
      if (v.policy.kind == BehaviorKind::colluder) {
        const auto &pp = participants_.at(p.proposer).policy;
        if (pp.kind == BehaviorKind::colluder && pp.group_id == v.policy.group_id) return true;
      }
      auto it = honest_verdict.find(p.proposer);
      if (it == honest_verdict.end()) {
        const chain::VrfContext ctx{round_.seed_cs.bytes, registry_.at(p.proposer)};
        const bool ok = chain::verify_block(chain_, p.block, ctx,
                                            [this](const chain::Transaction &tx) { return market_.validate_transaction(tx); });
        it = honest_verdict.emplace(p.proposer, ok).first;
      }
      return it->second;
    };
    (void)r;
    return cs::finalize_block(std::move(proposals_), round_, chain_, registry_, ids_, vote, supervisor_keys_, flags_,
                              now, &ledger_, cfg_.params.epsilon);
  }

  // -- PoW -----------------------------------------------------------------

  void pow_round(std::int64_t r) {
    reset_round_counters();
    const Tick t0 = net_.now();
    const std::uint64_t delivered0 = net_.delivered();
    RoundTrace trace;
    trace.round = r;
    market_.begin_round(r);
    draw_round_profile(r, t0);

    Tick t = t0;
    while (true) {
      ++t;
      pump(t);
      post_orders(t);
      match_and_deliver(t);
      if (t - t0 >= cfg_.trade_time || round_matches_ >= cfg_.trade_limit) break;
    }
    const Tick t_end = t;
    auto mempool = settle_round(t_end);

    const double mining = pow_baseline_round(cfg_.pow_difficulty, pow_rng_, cfg_.pow_hash_rate);
    const NodeId miner = ids_[pow_rng_.below(ids_.size())];
    const Tick t_final = t_end + static_cast<Tick>(std::ceil(mining));
    net_.advance_to(t_final);
    auto block = chain::make_block(chain_.tip(), std::move(mempool), miner, vrf::Output{}, t_final);
    chain_.append(block, std::nullopt, [this](const chain::Transaction &tx) { return market_.validate_transaction(tx); });

    ++metrics_.counts[miner].proposer;
    trace.proposer = miner;
    trace.block_hash = chain::hash_hex(block.hash);
    trace.tx_count = block.transactions.size();
    trace.orders = round_orders_;
    trace.matches = round_matches_;
    trace.ticks = t_final - t0;
    trace.events = (net_.delivered() - delivered0) + round_market_events_;
    trace.block_time = mining;
    metrics_.rounds.push_back(std::move(trace));
  }

  ScenarioConfig cfg_;
  Network net_;
  Rng sup_rng_;
  Rng pow_rng_;
  vrf::KeyPair supervisor_keys_;
  std::map<NodeId, Participant> participants_;
  std::vector<NodeId> ids_;
  std::map<NodeId, Bytes> registry_;
  std::map<NodeId, Bytes> pks_with_supervisor_;
  std::map<int, std::set<NodeId>> colluders_;

  market::Market market_;
  chain::Chain chain_;
  cs::FlagRegistry flags_;
  cs::RoundState round_;
  cb::ContributionList ledger_;
  cb::ContributionList dispatched_list_;
  std::optional<cb::RoundActivity> last_activity_;

  std::vector<cs::ComputingSubmission> submissions_;
  std::vector<cs::Proposal> proposals_;
  std::vector<PlannedOrder> planned_orders_;
  std::size_t next_order_ = 0;
  std::vector<PendingDelivery> deliveries_;
  std::vector<std::string> round_match_ids_;
  std::size_t round_orders_ = 0;
  std::size_t round_matches_ = 0;
  std::uint64_t round_market_events_ = 0;
  std::uint64_t round_votes_ = 0;
  std::uint64_t round_consensus_messages_ = 0;

  SimulationMetrics metrics_;
};

}  // namespace

RunArtifacts run_with_chain(const ScenarioConfig &config) { return Simulator(config).run(); }

SimulationMetrics run(const ScenarioConfig &config) { return run_with_chain(config).metrics; }

}  // namespace poc::simnet
