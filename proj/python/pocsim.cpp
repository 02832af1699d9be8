// Python bindings: VRF, contribution maths, single runs and the scenario
// runner. Configs cross the boundary as dicts (the JSON config schema).

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "poc/config.hpp"
#include "poc/contribution.hpp"
#include "poc/report.hpp"
#include "poc/runner.hpp"
#include "poc/simnet.hpp"
#include "poc/vrf.hpp"

namespace py = pybind11;
using namespace poc;

namespace {

nlohmann::json to_nlohmann(const py::object &obj) {
  auto json = py::module_::import("json");
  return nlohmann::json::parse(json.attr("dumps")(obj).cast<std::string>());
}

py::object to_python(const std::string &json_text) {
  return py::module_::import("json").attr("loads")(json_text);
}

py::bytes as_bytes(const Bytes &b) { return py::bytes(reinterpret_cast<const char *>(b.data()), b.size()); }

Bytes from_py(const py::bytes &b) {
  std::string s = b;
  return Bytes(s.begin(), s.end());
}

py::dict metrics_dict(const simnet::SimulationMetrics &m) {
  py::dict d;
  d["mode"] = simnet::to_string(m.mode);
  d["rng_seed"] = m.rng_seed;
  d["node_count"] = m.node_count;
  d["rounds_completed"] = m.rounds.size();
  d["chain_height"] = m.chain_height;
  d["chain_audit_ok"] = m.chain_audit_ok;
  d["funds_conserved"] = m.funds_initial == m.funds_final;
  d["priority_violations"] = m.priority_violations;
  d["consensus_failures"] = m.consensus_failures;
  d["block_times"] = m.block_times();
  py::dict counts;
  for (const auto &[id, c] : m.counts) {
    py::dict e;
    e["proposer"] = c.proposer;
    e["computing"] = c.computing;
    e["candidate"] = c.candidate;
    counts[py::int_(id.value)] = e;
  }
  d["counts"] = counts;
  py::list flags;
  for (const auto &f : m.flags) {
    flags.append(py::make_tuple(f.node_id.value, f.round_detected, consensus::to_string(f.cause)));
  }
  d["flags"] = flags;
  py::list proposers;
  for (const auto &r : m.rounds) proposers.append(r.supervisor_block ? 0u : r.proposer.value);
  d["proposers"] = proposers;
  return d;
}

}  // namespace

PYBIND11_MODULE(pocsim, m) {
  m.doc() = "Proof-of-contribution consensus simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);
  py::register_exception<InvalidKey>(m, "InvalidKey", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  m.def("vrf_keygen", [](const py::bytes &entropy) {
    auto kp = vrf::keygen(from_py(entropy));
    return py::make_tuple(as_bytes(kp.secret_key), as_bytes(kp.public_key));
  }, py::arg("entropy"), "Deterministic keypair (secret, public) from entropy bytes.");

  m.def("vrf_evaluate", [](const py::bytes &sk, const py::bytes &seed) {
    auto out = vrf::evaluate(from_py(sk), from_py(seed));
    return py::make_tuple(as_bytes(Bytes(out.value.bytes.begin(), out.value.bytes.end())),
                          as_bytes(Bytes(out.proof.begin(), out.proof.end())));
  }, py::arg("secret_key"), py::arg("seed"), "Returns (value, proof).");

  m.def("vrf_verify", [](const py::bytes &pk, const py::bytes &seed, const py::bytes &value, const py::bytes &proof) {
    vrf::Output out;
    const Bytes v = from_py(value);
    if (v.size() != out.value.bytes.size()) return false;
    std::copy(v.begin(), v.end(), out.value.bytes.begin());
    out.proof = from_py(proof);
    return vrf::verify(from_py(pk), from_py(seed), out);
  }, py::arg("public_key"), py::arg("seed"), py::arg("value"), py::arg("proof"));

  m.def("node_weight", [](const std::vector<double> &history, double epsilon) {
    return contribution::node_weight(history, epsilon);
  }, py::arg("history"), py::arg("epsilon") = contribution::Params{}.epsilon);

  m.def("energy_trading_contribution", [](const std::vector<std::pair<double, double>> &trades, double alpha2) {
    contribution::Params p;
    p.alpha2 = alpha2;
    std::vector<contribution::TradeRecord> recs;
    int k = 0;
    for (const auto &[ordered, delivered] : trades) {
      ++k;
      recs.push_back({"t" + std::to_string(k), ordered, delivered, 0, k});
    }
    return contribution::energy_trading_contribution(recs, p);
  }, py::arg("trades"), py::arg("alpha2") = contribution::Params{}.alpha2,
     "ETC of one round's (ordered, delivered) trades, in submission order.");

  m.def("pow_baseline_round", [](int difficulty, std::uint64_t seed, std::size_t samples) {
    Rng rng(seed);
    std::vector<double> out;
    for (std::size_t i = 0; i < samples; ++i) out.push_back(simnet::pow_baseline_round(difficulty, rng));
    return out;
  }, py::arg("difficulty"), py::arg("seed") = 1, py::arg("samples") = 1);

  m.def("list_scenarios", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto &s : report::catalogue()) out.emplace_back(s.name, s.description);
    return out;
  });

  m.def("scenario_config", [](const std::string &name) {
    return to_python(config::to_json(report::find_scenario(name).config).dump());
  }, py::arg("name"));

  m.def("run", [](const py::object &cfg) {
    auto config = config::from_json(to_nlohmann(cfg));
    simnet::SimulationMetrics metrics;
    {
      py::gil_scoped_release release;
      metrics = simnet::run(config);
    }
    return metrics_dict(metrics);
  }, py::arg("config"), "Runs one simulation from a config dict.");

  m.def("run_scenario", [](const std::string &scenario, std::optional<std::int64_t> rounds,
                           std::optional<std::uint64_t> seed, std::vector<std::string> modes,
                           std::optional<std::filesystem::path> output_dir) {
    runner::RunRequest req;
    req.scenario = scenario;
    req.rounds = rounds;
    req.seed = seed;
    for (const auto &mode : modes) req.modes.push_back(simnet::parse_mode(mode));
    if (output_dir) req.output_dir = *output_dir;
    runner::RunResult res;
    {
      py::gil_scoped_release release;
      res = runner::run_scenario(req);
    }
    py::list runs;
    for (const auto &r : res.runs) runs.append(metrics_dict(r));
    py::dict d;
    d["scenario"] = res.scenario;
    d["runs"] = runs;
    std::vector<std::string> files;
    for (const auto &f : res.files) files.push_back(f.string());
    d["files"] = files;
    return d;
  }, py::arg("scenario"), py::arg("rounds") = py::none(), py::arg("seed") = py::none(),
     py::arg("modes") = std::vector<std::string>{}, py::arg("output_dir") = py::none());
}
