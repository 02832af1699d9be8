#include "poc/contribution.hpp"

#include "poc/vrf.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace poc::contribution {

void Params::validate() const {
  for (double a : {alpha1, alpha2, alpha3, alpha4, alpha5}) {
    if (!(a >= 0) || !std::isfinite(a)) throw InvalidArgument("contribution params: alphas must be >= 0");
  }
  if (!(epsilon > 0)) throw InvalidArgument("contribution params: epsilon must be > 0");
}

double power_generation_contribution(const GenerationReport &report, const Params &params) {
  double total = 0;
  for (double p : report.device_outputs) {
    if (!(p >= 0)) throw InvalidArgument("generation report: negative device output");
    total += params.alpha1 * p;
  }
  return total;
}

double raw_transaction_quality(double p_order, double p_real) {
  if (!(p_order > 0)) throw InvalidArgument("transaction quality: p_order must be > 0");
  if (!(p_real >= 0)) throw InvalidArgument("transaction quality: p_real must be >= 0");
  return 1.0 - (p_order - p_real) / p_order;
}

double transaction_quality(double p_order, double p_real) {
  double raw = raw_transaction_quality(p_order, p_real);
  return std::clamp(raw, 0.0, 1.0);
}

double energy_trading_contribution(const std::vector<TradeRecord> &trades, const Params &params) {
  if (trades.empty()) return 0.0;
  std::vector<bool> seen(trades.size() + 1, false);
  const auto round = trades.front().round_index;
  for (const auto &t : trades) {
    if (t.round_index != round) throw InvalidArgument("trades span more than one round");
    if (t.intra_round_ordinal < 1 || static_cast<std::size_t>(t.intra_round_ordinal) > trades.size()) {
      throw InvalidArgument("trade ordinal out of range");
    }
    if (seen[t.intra_round_ordinal]) throw InvalidArgument("duplicate trade ordinal");
    seen[t.intra_round_ordinal] = true;
  }
  double total = 0;
  for (const auto &t : trades) {
    const double k = t.intra_round_ordinal;
    total += params.alpha2 * transaction_quality(t.p_order, t.p_real) / (k * k);
  }
  return total;
}

double stable_online_contribution(const OnlineSession &session, const Params &params) {
  if (session.t_off < session.t_on) throw InvalidArgument("online session ends before it starts");
  return params.alpha3 * static_cast<double>(session.t_off - session.t_on);
}

double energy_contribution(const GenerationReport &report, const std::vector<TradeRecord> &trades,
                           const OnlineSession &session, const Params &params) {
  return power_generation_contribution(report, params) + energy_trading_contribution(trades, params) +
         stable_online_contribution(session, params);
}

double consensus_contribution(const ConsensusService &service, const Params &params) {
  if (service.role == ServiceRole::computing) {
    if (service.packaged_tx_count != 0) throw InvalidArgument("computing service cannot package transactions");
    if (service.network_size < 1) throw InvalidArgument("network size must be positive");
    return static_cast<double>(service.network_size) * params.alpha4;
  }
  if (service.packaged_tx_count < 0) throw InvalidArgument("negative packaged transaction count");
  return static_cast<double>(service.packaged_tx_count) * params.alpha5;
}

double node_weight(const std::vector<double> &history, double epsilon) {
  if (history.empty()) throw InvalidArgument("node weight: empty history");
  if (history.size() == 1) return 1.0 / std::max(epsilon, history.front());
  // Welford's update keeps the variance accurate for long histories.
  double mean = 0;
  double m2 = 0;
  std::size_t n = 0;
  for (double x : history) {
    ++n;
    double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double stddev = std::sqrt(std::max(0.0, m2) / static_cast<double>(n));
  return 1.0 / std::max(epsilon, stddev);
}

std::vector<double> Entry::numeric_history() const {
  std::vector<double> out;
  out.reserve(history.size());
  for (const auto &h : history) out.push_back(h.total());
  return out;
}

Entry reset_contribution(Entry entry, double epsilon) {
  entry.value = 0;
  entry.energy_value = 0;
  if (entry.history.empty() || !entry.history.back().reset) {
    entry.history.push_back(HistoryRecord{0, 0, true});
  }
  entry.weight = node_weight(entry.numeric_history(), epsilon);
  return entry;
}

namespace {
bool value_order(const Entry &a, const Entry &b) {
  if (a.value != b.value) return a.value > b.value;
  return a.node_id < b.node_id;
}
}  // namespace

ContributionList::ContributionList(std::vector<Entry> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), value_order);
  std::set<NodeId> ids;
  for (const auto &e : entries_) {
    if (!ids.insert(e.node_id).second) throw InvalidArgument("contribution list: duplicate node id");
  }
}

const Entry *ContributionList::find(NodeId id) const {
  for (const auto &e : entries_) {
    if (e.node_id == id) return &e;
  }
  return nullptr;
}

std::vector<const Entry *> ContributionList::by_energy_contribution() const {
  std::vector<const Entry *> out;
  out.reserve(entries_.size());
  for (const auto &e : entries_) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](const Entry *a, const Entry *b) {
    if (a->energy_value != b->energy_value) return a->energy_value > b->energy_value;
    return a->node_id < b->node_id;
  });
  return out;
}

ContributionList ContributionList::without(const std::set<NodeId> &excluded) const {
  std::vector<Entry> kept;
  for (const auto &e : entries_) {
    if (!excluded.contains(e.node_id)) kept.push_back(e);
  }
  return ContributionList(std::move(kept));
}

std::string ContributionList::serialize() const {
  if (serialized_) return *serialized_;
  std::string out;
  for (const auto &e : entries_) {
    out += std::to_string(e.node_id.value);
    out += ',';
    out += to_hex(e.pk);
    out += ',';
    out += format_double(e.value);
    out += ',';
    out += format_double(e.weight);
    out += ',';
    for (std::size_t i = 0; i < e.history.size(); ++i) {
      if (i) out += ',';
      const auto &h = e.history[i];
      if (h.reset) {
        out += 'R';
      } else {
        out += format_double(h.ce);
        out += '/';
        out += format_double(h.cc);
      }
    }
    out += '\n';
  }
  serialized_ = std::make_shared<const std::string>(out);
  return out;
}

const std::array<std::uint8_t, 32> &ContributionList::digest() const {
  if (!digest_) digest_ = std::make_shared<const std::array<std::uint8_t, 32>>(vrf::sha256(to_bytes(serialize())));
  return *digest_;
}

ContributionList ContributionList::parse(std::string_view text) {
  std::vector<Entry> entries;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 5) throw InvalidArgument("contribution list: malformed line");

    Entry e;
    std::uint32_t id = 0;
    auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), id);
    if (ec != std::errc{} || ptr != fields[0].data() + fields[0].size()) {
      throw InvalidArgument("contribution list: bad node id");
    }
    e.node_id = NodeId{id};
    e.pk = from_hex(fields[1]);
    e.value = parse_double(fields[2]);
    e.weight = parse_double(fields[3]);
    for (std::size_t i = 4; i < fields.size(); ++i) {
      auto item = fields[i];
      if (item.empty() && fields.size() == 5) break;
      if (item == "R") {
        e.history.push_back(HistoryRecord{0, 0, true});
        continue;
      }
      auto slash = item.find('/');
      if (slash == std::string_view::npos) throw InvalidArgument("contribution list: malformed history item");
      e.history.push_back(HistoryRecord{parse_double(item.substr(0, slash)), parse_double(item.substr(slash + 1)), false});
    }
    // energy_value is the CE accrued since the last reset.
    // Summed forwards, in the order the builder accrued it.
    std::size_t from = e.history.size();
    while (from > 0 && !e.history[from - 1].reset) --from;
    for (std::size_t i = from; i < e.history.size(); ++i) e.energy_value += e.history[i].ce;
    entries.push_back(std::move(e));
  }
  return ContributionList(std::move(entries));
}

ContributionList initial_list(const std::map<NodeId, Bytes> &registry) {
  std::vector<Entry> entries;
  for (const auto &[id, pk] : registry) {
    Entry e;
    e.node_id = id;
    e.pk = pk;
    e.weight = 1.0;
    entries.push_back(std::move(e));
  }
  return ContributionList(std::move(entries));
}

ContributionList build_contribution_list(const LedgerState &state, const Params &params) {
  params.validate();
  std::map<NodeId, Entry> by_id;
  if (state.previous) {
    for (const auto &e : state.previous->entries()) by_id.emplace(e.node_id, e);
  }
  for (const auto &[id, pk] : state.registry) {
    if (!by_id.contains(id)) {
      Entry e;
      e.node_id = id;
      e.pk = pk;
      e.weight = 1.0;
      by_id.emplace(id, std::move(e));
    }
  }

  std::vector<Entry> out;
  for (auto &[id, entry] : by_id) {
    if (state.flagged.contains(id)) continue;
    if (state.activity) {
      const NodeActivity *act = nullptr;
      if (auto it = state.activity->nodes.find(id); it != state.activity->nodes.end()) act = &it->second;

      if (act && act->proposer_reset) entry = reset_contribution(std::move(entry), params.epsilon);

      double ce = 0;
      double cc = 0;
      if (act) {
        ce = power_generation_contribution(act->generation, params) +
             energy_trading_contribution(act->trades, params) +
             (act->session ? stable_online_contribution(*act->session, params) : 0.0);
        if (act->service) cc = consensus_contribution(*act->service, params);
      }
      entry.history.push_back(HistoryRecord{ce, cc, false});
      entry.value += total_contribution(ce, cc);
      entry.energy_value += ce;
      entry.weight = node_weight(entry.numeric_history(), params.epsilon);
    }
    out.push_back(std::move(entry));
  }
  return ContributionList(std::move(out));
}

}  // namespace poc::contribution
