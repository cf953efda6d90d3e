#include "evjrs/instances.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "evjrs/common.hpp"
#include "evjrs/hashutil.hpp"
#include "evjrs/jsonutil.hpp"
#include "evjrs/rng.hpp"

namespace evjrs::instances {

using nlohmann::json;

namespace {

std::string idx_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", i);
  return buf;
}

}  // namespace

netmodel::ValidationReport validate_instance(const ProblemInstance& inst) {
  netmodel::ValidationReport rep =
      netmodel::validate_network(inst.network.transport, inst.network.distribution);

  if (inst.horizon < 2) rep.violations.push_back("horizon must be >= 2");
  int spans = inst.horizon - 1;
  int buses = static_cast<int>(inst.network.distribution.buses.size());
  int pvs = static_cast<int>(inst.network.distribution.pv_units.size());

  const ScenarioSet& sc = inst.scenarios;
  if (sc.count() < 1) rep.violations.push_back("scenario set is empty");
  double psum = 0.0;
  for (double p : sc.probabilities) {
    if (p < 0.0) rep.violations.push_back("negative scenario probability");
    psum += p;
  }
  if (sc.count() >= 1 && std::abs(psum - 1.0) > 1e-12)
    rep.violations.push_back("scenario probabilities sum to " + std::to_string(psum));
  if (static_cast<int>(sc.solar.size()) != sc.count())
    rep.violations.push_back("solar tensor count != scenario count");
  for (const Mat& m : sc.solar) {
    if (m.rows != pvs || m.cols != inst.horizon)
      rep.violations.push_back("solar tensor shape mismatch");
    for (double v : m.data)
      if (v < 0.0) {
        rep.violations.push_back("negative solar value");
        break;
      }
  }

  if (inst.loads.active.rows != buses || inst.loads.active.cols != inst.horizon ||
      inst.loads.reactive.rows != buses || inst.loads.reactive.cols != inst.horizon)
    rep.violations.push_back("load profile shape mismatch");
  for (double v : inst.loads.active.data)
    if (v < 0.0) {
      rep.violations.push_back("negative active demand");
      break;
    }

  const FleetSpec& fl = inst.fleet;
  if (fl.evs.empty()) rep.violations.push_back("fleet is empty");
  if (!(fl.eta >= 0.0 && fl.eta < 1.0)) rep.violations.push_back("eta must be in [0,1)");
  std::set<int> nodes(inst.network.transport.nodes.begin(), inst.network.transport.nodes.end());
  for (size_t k = 0; k < fl.evs.size(); ++k) {
    const EvSpec& ev = fl.evs[k];
    std::string tag = "ev " + std::to_string(k);
    if (!nodes.count(ev.start_node)) rep.violations.push_back(tag + ": start node not declared");
    if (!(ev.e_min <= ev.e_init && ev.e_init <= ev.e_max))
      rep.violations.push_back(tag + ": e_init outside [e_min, e_max]");
    if (!(ev.p_ev_max > 0.0)) rep.violations.push_back(tag + ": p_ev_max must be > 0");
  }

  std::vector<int> jobs_per_ev(fl.evs.size(), 0);
  for (const JobTuple& j : inst.schedule.jobs) {
    if (j.ev < 0 || j.ev >= static_cast<int>(fl.evs.size())) {
      rep.violations.push_back("schedule references unknown ev " + std::to_string(j.ev));
      continue;
    }
    ++jobs_per_ev[j.ev];
    if (!nodes.count(j.node))
      rep.violations.push_back("schedule node " + std::to_string(j.node) + " not declared");
    if (j.span < 0 || j.span >= spans)
      rep.violations.push_back("schedule span " + std::to_string(j.span) + " outside [0, " +
                               std::to_string(spans) + ")");
  }
  for (size_t k = 0; k < jobs_per_ev.size(); ++k)
    if (jobs_per_ev[k] == 0)
      rep.violations.push_back("ev " + std::to_string(k) + " has no schedule");

  if (static_cast<int>(inst.congestion.flags.size()) != spans)
    rep.violations.push_back("congestion profile length != span count");
  for (int f : inst.congestion.flags)
    if (f != 0 && f != 1) rep.violations.push_back("congestion flag not in {0,1}");

  if (!rep.ok()) return rep;

  // Reachability: walk each EV's jobs in span order through the TSN.
  netmodel::TimeSpaceNetwork tsn = netmodel::build_tsn(inst.network.transport, inst.horizon);
  for (size_t k = 0; k < fl.evs.size(); ++k) {
    std::vector<JobTuple> jobs;
    for (const JobTuple& j : inst.schedule.jobs)
      if (j.ev == static_cast<int>(k)) jobs.push_back(j);
    std::sort(jobs.begin(), jobs.end(),
              [](const JobTuple& a, const JobTuple& b) { return a.span < b.span; });
    int node = fl.evs[k].start_node;
    int t = 0;
    for (const JobTuple& j : jobs) {
      auto reach = netmodel::earliest_arrival(tsn, node, inst.congestion.flags, t);
      auto it = reach.find(j.node);
      if (it == reach.end() || it->second > j.span) {
        rep.violations.push_back("ev " + std::to_string(k) + " cannot reach node " +
                                 std::to_string(j.node) + " by span " + std::to_string(j.span));
        break;
      }
      node = j.node;
      t = j.span;
    }
  }
  return rep;
}

ProblemInstance generate_instance(const netmodel::Network& net, const GenConfig& cfg,
                                  uint64_t seed, int fleet_size) {
  if (fleet_size < 1) throw Error(ErrorCategory::config, "fleet size must be >= 1");
  if (cfg.od_pairs.empty() || cfg.first_nodes.empty() || cfg.second_nodes.empty())
    throw Error(ErrorCategory::config, "generation config needs od_pairs and both node sets");
  int pvs = static_cast<int>(net.distribution.pv_units.size());
  if (pvs > 0 && cfg.solar_shapes.empty())
    throw Error(ErrorCategory::config, "generation config needs solar_shapes");
  if (cfg.load_shapes.empty())
    throw Error(ErrorCategory::config, "generation config needs load_shapes");
  for (const auto& s : cfg.solar_shapes)
    if (static_cast<int>(s.size()) != cfg.horizon)
      throw Error(ErrorCategory::config, "solar shape length != horizon");
  for (const auto& s : cfg.load_shapes)
    if (static_cast<int>(s.size()) != cfg.horizon)
      throw Error(ErrorCategory::config, "load shape length != horizon");

  Rng rng(seed);
  ProblemInstance inst;
  inst.network = net;
  inst.horizon = cfg.horizon;
  int spans = cfg.horizon - 1;

  netmodel::TimeSpaceNetwork tsn = netmodel::build_tsn(net.transport, cfg.horizon);

  // Congestion window.
  inst.congestion.flags.assign(spans, 0);
  int clen = std::min(rng.uniform_int(cfg.congestion_len_lo, cfg.congestion_len_hi), spans);
  if (clen > 0) {
    int start = rng.uniform_int(0, spans - clen);
    for (int s = start; s < start + clen; ++s) inst.congestion.flags[s] = 1;
  }

  // Fleet and schedules.
  inst.fleet.eta = cfg.eta;
  inst.fleet.price_charge = cfg.price_charge;
  inst.fleet.price_discharge = cfg.price_discharge;
  for (int k = 0; k < fleet_size; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
      auto [o, d] = cfg.od_pairs[rng.uniform_int(0, static_cast<int>(cfg.od_pairs.size()) - 1)];
      bool flip = std::find(cfg.flip_start_nodes.begin(), cfg.flip_start_nodes.end(), o) !=
                  cfg.flip_start_nodes.end();
      const auto& set1 = flip ? cfg.second_nodes : cfg.first_nodes;
      const auto& set2 = flip ? cfg.first_nodes : cfg.second_nodes;
      int n1 = set1[rng.uniform_int(0, static_cast<int>(set1.size()) - 1)];
      int s1 = rng.uniform_int(cfg.first_window_lo, cfg.first_window_hi);
      int n2 = set2[rng.uniform_int(0, static_cast<int>(set2.size()) - 1)];
      int s2 = rng.uniform_int(cfg.second_window_lo, cfg.second_window_hi);
      double e_init = rng.uniform(cfg.e_init_lo, cfg.e_init_hi);

      std::vector<JobTuple> jobs = {{k, n1, s1}, {k, n2, s2}};
      if (n2 != d || s2 != spans - 1) jobs.push_back({k, d, spans - 1});

      int node = o, t = 0;
      bool ok = true;
      for (const JobTuple& j : jobs) {
        if (j.span < t) {
          ok = false;
          break;
        }
        auto reach = netmodel::earliest_arrival(tsn, node, inst.congestion.flags, t);
        auto it = reach.find(j.node);
        if (it == reach.end() || it->second > j.span) {
          ok = false;
          break;
        }
        node = j.node;
        t = j.span;
      }
      if (!ok) continue;

      inst.fleet.evs.push_back({o, e_init, cfg.e_min, cfg.e_max, cfg.p_ev_max});
      for (const JobTuple& j : jobs) inst.schedule.jobs.push_back(j);
      placed = true;
    }
    if (!placed)
      throw Error(ErrorCategory::validation, "could not draw a reachable schedule for ev " +
                                                 std::to_string(k) + " after " +
                                                 std::to_string(cfg.max_retries) + " retries");
  }

  // Solar scenarios, equal probabilities.
  int nsc = std::max(1, cfg.scenario_count);
  inst.scenarios.probabilities.assign(nsc, 1.0 / nsc);
  for (int sc = 0; sc < nsc; ++sc) {
    Mat m(pvs, cfg.horizon);
    for (int u = 0; u < pvs; ++u) {
      const auto& shape = cfg.solar_shapes[rng.uniform_int(
          0, static_cast<int>(cfg.solar_shapes.size()) - 1)];
      double peak = rng.uniform(cfg.solar_peak_lo, cfg.solar_peak_hi);
      for (int t = 0; t < cfg.horizon; ++t) {
        double v = shape[t] * peak * (1.0 + rng.uniform(-cfg.solar_noise, cfg.solar_noise));
        m(u, t) = std::max(0.0, v);
      }
    }
    inst.scenarios.solar.push_back(std::move(m));
  }

  // Loads.
  int buses = static_cast<int>(net.distribution.buses.size());
  inst.loads.active = Mat(buses, cfg.horizon);
  inst.loads.reactive = Mat(buses, cfg.horizon);
  for (int b = 0; b < buses; ++b) {
    const auto& shape =
        cfg.load_shapes[rng.uniform_int(0, static_cast<int>(cfg.load_shapes.size()) - 1)];
    double peak = rng.uniform(cfg.load_peak_lo, cfg.load_peak_hi);
    for (int t = 0; t < cfg.horizon; ++t) {
      double v = shape[t] * peak * (1.0 + rng.uniform(-cfg.load_noise, cfg.load_noise));
      inst.loads.active(b, t) = std::max(0.0, v);
      inst.loads.reactive(b, t) = cfg.reactive_ratio * inst.loads.active(b, t);
    }
  }

  netmodel::ValidationReport rep = validate_instance(inst);
  if (!rep.ok())
    throw Error(ErrorCategory::internal, "generated instance fails validation: " +
                                             rep.violations.front());
  return inst;
}

// ---- Feature encoding ----

FeatureTensor encode_features(const ProblemInstance& inst, int scenario) {
  if (scenario < 0 || scenario >= inst.scenarios.count())
    throw Error(ErrorCategory::validation,
                "scenario index " + std::to_string(scenario) + " outside [0, " +
                    std::to_string(inst.scenarios.count()) + ")");
  int b = static_cast<int>(inst.network.distribution.buses.size());
  int s = static_cast<int>(inst.network.distribution.pv_units.size());
  int e = inst.fleet_size();
  int T = inst.horizon;

  FeatureTensor ft;
  ft.ev_count = e;
  ft.tokens = Mat(2 * b + s + e, T);
  ft.token_type.reserve(2 * b + s + e);

  for (int i = 0; i < b; ++i) {
    for (int t = 0; t < T; ++t) ft.tokens(i, t) = inst.loads.active(i, t);
    ft.token_type.push_back(static_cast<int>(TokenType::load_p));
  }
  for (int i = 0; i < b; ++i) {
    for (int t = 0; t < T; ++t) ft.tokens(b + i, t) = inst.loads.reactive(i, t);
    ft.token_type.push_back(static_cast<int>(TokenType::load_q));
  }
  const Mat& solar = inst.scenarios.solar[scenario];
  for (int i = 0; i < s; ++i) {
    for (int t = 0; t < T; ++t) ft.tokens(2 * b + i, t) = solar(i, t);
    ft.token_type.push_back(static_cast<int>(TokenType::pv));
  }

  int max_node = 1;
  for (int n : inst.network.transport.nodes) max_node = std::max(max_node, n);
  for (int k = 0; k < e; ++k) ft.token_type.push_back(static_cast<int>(TokenType::ev));
  for (const JobTuple& j : inst.schedule.jobs)
    ft.tokens(2 * b + s + j.ev, j.span) = static_cast<double>(j.node) / max_node;

  return ft;
}

NormStats compute_norm_stats(const std::vector<FeatureTensor>& samples) {
  if (samples.empty())
    throw Error(ErrorCategory::validation, "cannot fit normalization on an empty sample set");
  NormStats st;
  bool seen[4] = {false, false, false, false};
  for (const FeatureTensor& ft : samples) {
    for (int r = 0; r < ft.tokens.rows; ++r) {
      int ty = ft.token_type[r];
      for (int c = 0; c < ft.tokens.cols; ++c) {
        double v = ft.tokens(r, c);
        if (!seen[ty]) {
          st.lo[ty] = st.hi[ty] = v;
          seen[ty] = true;
        } else {
          st.lo[ty] = std::min(st.lo[ty], v);
          st.hi[ty] = std::max(st.hi[ty], v);
        }
      }
    }
  }
  st.valid = true;
  return st;
}

void apply_normalization(FeatureTensor& ft, const NormStats& stats) {
  if (!stats.valid)
    throw Error(ErrorCategory::config,
                "normalization statistics missing; fit them on a training split first");
  for (int r = 0; r < ft.tokens.rows; ++r) {
    int ty = ft.token_type[r];
    double lo = stats.lo[ty], hi = stats.hi[ty];
    for (int c = 0; c < ft.tokens.cols; ++c) {
      double& v = ft.tokens(r, c);
      v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    }
  }
}

// ---- Tensor files ----

namespace {
constexpr char kTensorMagic[4] = {'E', 'V', 'T', 'N'};
constexpr uint32_t kTensorVersion = 1;
}  // namespace

void write_tensor(const std::string& path, const Mat& m) {
  std::string bytes;
  bytes.reserve(20 + m.data.size() * 8);
  bytes.append(kTensorMagic, 4);
  uint32_t ver = kTensorVersion;
  uint64_t rows = m.rows, cols = m.cols;
  bytes.append(reinterpret_cast<const char*>(&ver), 4);
  bytes.append(reinterpret_cast<const char*>(&rows), 8);
  bytes.append(reinterpret_cast<const char*>(&cols), 8);
  bytes.append(reinterpret_cast<const char*>(m.data.data()), m.data.size() * 8);
  write_file(path, bytes);
}

Mat read_tensor(const std::string& path) {
  std::string bytes = read_file(path);
  auto need = [&](size_t offset, size_t n) {
    if (offset + n > bytes.size())
      throw Error(ErrorCategory::io, path + ": truncated tensor file at byte " +
                                         std::to_string(bytes.size()) + " (needed " +
                                         std::to_string(offset + n) + ")");
  };
  need(0, 4);
  if (std::memcmp(bytes.data(), kTensorMagic, 4) != 0)
    throw Error(ErrorCategory::io, path + ": not a tensor file (bad magic)");
  need(4, 4);
  uint32_t ver;
  std::memcpy(&ver, bytes.data() + 4, 4);
  if (ver != kTensorVersion)
    throw Error(ErrorCategory::io, path + ": unsupported tensor schema version " +
                                       std::to_string(ver));
  need(8, 16);
  uint64_t rows, cols;
  std::memcpy(&rows, bytes.data() + 8, 8);
  std::memcpy(&cols, bytes.data() + 16, 8);
  need(24, rows * cols * 8);
  Mat m(static_cast<int>(rows), static_cast<int>(cols));
  std::memcpy(m.data.data(), bytes.data() + 24, rows * cols * 8);
  return m;
}

// ---- Instance JSON ----

namespace {

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const json& j, int expect_cols, const std::string& what) {
  int rows = static_cast<int>(j.size());
  Mat m(rows, rows > 0 ? static_cast<int>(j[0].size()) : expect_cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != m.cols)
      throw Error(ErrorCategory::validation, what + ": ragged rows");
    for (int c = 0; c < m.cols; ++c) m.data[static_cast<size_t>(r) * m.cols + c] = j[r][c];
  }
  return m;
}

}  // namespace

std::string instance_to_json(const ProblemInstance& inst) {
  json j;
  j["version"] = 1;
  j["horizon"] = inst.horizon;
  j["network"] = json::parse(netmodel::network_to_json(inst.network));

  json sc;
  sc["probabilities"] = inst.scenarios.probabilities;
  json solar = json::array();
  for (const Mat& m : inst.scenarios.solar) solar.push_back(mat_to_json(m));
  sc["solar"] = solar;
  j["scenarios"] = sc;

  j["loads"] = {{"active", mat_to_json(inst.loads.active)},
                {"reactive", mat_to_json(inst.loads.reactive)}};

  json fl;
  fl["eta"] = inst.fleet.eta;
  fl["price_charge"] = inst.fleet.price_charge;
  fl["price_discharge"] = inst.fleet.price_discharge;
  json evs = json::array();
  for (const EvSpec& ev : inst.fleet.evs)
    evs.push_back({{"start_node", ev.start_node},
                   {"e_init", ev.e_init},
                   {"e_min", ev.e_min},
                   {"e_max", ev.e_max},
                   {"p_ev_max", ev.p_ev_max}});
  fl["evs"] = evs;
  j["fleet"] = fl;

  json jobs = json::array();
  for (const JobTuple& t : inst.schedule.jobs)
    jobs.push_back({{"ev", t.ev}, {"node", t.node}, {"span", t.span}});
  j["schedule"] = jobs;
  j["congestion"] = inst.congestion.flags;
  return j.dump(2);
}

ProblemInstance instance_from_json(const std::string& text) {
  json j = parse_json(text, "instance file");
  reject_unknown_keys(
      j, {"version", "horizon", "network", "scenarios", "loads", "fleet", "schedule", "congestion"},
      "instance file");
  check_schema_version(j, 1, "instance file");

  ProblemInstance inst;
  inst.horizon = j.at("horizon").get<int>();
  inst.network = netmodel::network_from_json(j.at("network").dump());

  const json& sc = j.at("scenarios");
  reject_unknown_keys(sc, {"probabilities", "solar"}, "scenarios section");
  inst.scenarios.probabilities = sc.at("probabilities").get<std::vector<double>>();
  int pvs = static_cast<int>(inst.network.distribution.pv_units.size());
  for (const json& m : sc.at("solar"))
    inst.scenarios.solar.push_back(mat_from_json(m, inst.horizon, "solar tensor"));
  for (Mat& m : inst.scenarios.solar)
    if (m.rows == 0) m = Mat(pvs, inst.horizon);  // no PV units: keep shape

  const json& lo = j.at("loads");
  reject_unknown_keys(lo, {"active", "reactive"}, "loads section");
  inst.loads.active = mat_from_json(lo.at("active"), inst.horizon, "active load");
  inst.loads.reactive = mat_from_json(lo.at("reactive"), inst.horizon, "reactive load");

  const json& fl = j.at("fleet");
  reject_unknown_keys(fl, {"eta", "price_charge", "price_discharge", "evs"}, "fleet section");
  inst.fleet.eta = fl.at("eta").get<double>();
  inst.fleet.price_charge = fl.at("price_charge").get<double>();
  inst.fleet.price_discharge = fl.at("price_discharge").get<double>();
  for (const json& je : fl.at("evs")) {
    reject_unknown_keys(je, {"start_node", "e_init", "e_min", "e_max", "p_ev_max"}, "ev entry");
    inst.fleet.evs.push_back({je.at("start_node").get<int>(), je.at("e_init").get<double>(),
                              je.at("e_min").get<double>(), je.at("e_max").get<double>(),
                              je.at("p_ev_max").get<double>()});
  }

  for (const json& jt : j.at("schedule")) {
    reject_unknown_keys(jt, {"ev", "node", "span"}, "schedule entry");
    inst.schedule.jobs.push_back(
        {jt.at("ev").get<int>(), jt.at("node").get<int>(), jt.at("span").get<int>()});
  }
  inst.congestion.flags = j.at("congestion").get<std::vector<int>>();
  return inst;
}

void write_instance(const std::string& path, const ProblemInstance& inst) {
  write_file(path, instance_to_json(inst));
}

ProblemInstance read_instance(const std::string& path) {
  return instance_from_json(read_file(path));
}

// ---- Generation config JSON ----

std::string gen_config_to_json(const GenConfig& cfg) {
  json j;
  j["version"] = 1;
  j["horizon"] = cfg.horizon;
  j["scenario_count"] = cfg.scenario_count;
  json pairs = json::array();
  for (auto [o, d] : cfg.od_pairs) pairs.push_back({o, d});
  j["od_pairs"] = pairs;
  j["first_nodes"] = cfg.first_nodes;
  j["first_window"] = {cfg.first_window_lo, cfg.first_window_hi};
  j["second_nodes"] = cfg.second_nodes;
  j["second_window"] = {cfg.second_window_lo, cfg.second_window_hi};
  j["flip_start_nodes"] = cfg.flip_start_nodes;
  j["e_min"] = cfg.e_min;
  j["e_max"] = cfg.e_max;
  j["e_init"] = {cfg.e_init_lo, cfg.e_init_hi};
  j["p_ev_max"] = cfg.p_ev_max;
  j["eta"] = cfg.eta;
  j["price_charge"] = cfg.price_charge;
  j["price_discharge"] = cfg.price_discharge;
  j["congestion_len"] = {cfg.congestion_len_lo, cfg.congestion_len_hi};
  j["solar_shapes"] = cfg.solar_shapes;
  j["solar_peak"] = {cfg.solar_peak_lo, cfg.solar_peak_hi};
  j["solar_noise"] = cfg.solar_noise;
  j["load_shapes"] = cfg.load_shapes;
  j["load_peak"] = {cfg.load_peak_lo, cfg.load_peak_hi};
  j["load_noise"] = cfg.load_noise;
  j["reactive_ratio"] = cfg.reactive_ratio;
  j["max_retries"] = cfg.max_retries;
  return j.dump(2);
}

GenConfig gen_config_from_json(const std::string& text) {
  json j = parse_json(text, "generation config");
  reject_unknown_keys(j,
                      {"version", "horizon", "scenario_count", "od_pairs", "first_nodes",
                       "first_window", "second_nodes", "second_window", "flip_start_nodes",
                       "e_min", "e_max", "e_init", "p_ev_max", "eta", "price_charge",
                       "price_discharge", "congestion_len", "solar_shapes", "solar_peak",
                       "solar_noise", "load_shapes", "load_peak", "load_noise", "reactive_ratio",
                       "max_retries"},
                      "generation config");
  check_schema_version(j, 1, "generation config");
  GenConfig cfg;
  cfg.horizon = j.at("horizon").get<int>();
  cfg.scenario_count = j.at("scenario_count").get<int>();
  for (const json& p : j.at("od_pairs")) cfg.od_pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
  cfg.first_nodes = j.at("first_nodes").get<std::vector<int>>();
  cfg.first_window_lo = j.at("first_window")[0];
  cfg.first_window_hi = j.at("first_window")[1];
  cfg.second_nodes = j.at("second_nodes").get<std::vector<int>>();
  cfg.second_window_lo = j.at("second_window")[0];
  cfg.second_window_hi = j.at("second_window")[1];
  cfg.flip_start_nodes = j.value("flip_start_nodes", std::vector<int>{});
  cfg.e_min = j.at("e_min").get<double>();
  cfg.e_max = j.at("e_max").get<double>();
  cfg.e_init_lo = j.at("e_init")[0];
  cfg.e_init_hi = j.at("e_init")[1];
  cfg.p_ev_max = j.at("p_ev_max").get<double>();
  cfg.eta = j.at("eta").get<double>();
  cfg.price_charge = j.at("price_charge").get<double>();
  cfg.price_discharge = j.at("price_discharge").get<double>();
  cfg.congestion_len_lo = j.at("congestion_len")[0];
  cfg.congestion_len_hi = j.at("congestion_len")[1];
  cfg.solar_shapes = j.at("solar_shapes").get<std::vector<std::vector<double>>>();
  cfg.solar_peak_lo = j.at("solar_peak")[0];
  cfg.solar_peak_hi = j.at("solar_peak")[1];
  cfg.solar_noise = j.at("solar_noise").get<double>();
  cfg.load_shapes = j.at("load_shapes").get<std::vector<std::vector<double>>>();
  cfg.load_peak_lo = j.at("load_peak")[0];
  cfg.load_peak_hi = j.at("load_peak")[1];
  cfg.load_noise = j.at("load_noise").get<double>();
  cfg.reactive_ratio = j.at("reactive_ratio").get<double>();
  cfg.max_retries = j.value("max_retries", 50);
  return cfg;
}

// ---- Datasets ----

void write_manifest(const std::string& dir, const DatasetManifest& m) {
  json j;
  j["version"] = 1;
  j["master_seed"] = m.master_seed;
  j["multiplier"] = m.multiplier;
  j["ev_counts"] = m.ev_counts;
  json entries = json::array();
  for (const DatasetEntry& e : m.entries)
    entries.push_back({{"index", e.index},
                       {"seed", e.seed},
                       {"fleet_size", e.fleet_size},
                       {"instance_file", e.instance_file},
                       {"feature_file", e.feature_file},
                       {"label_file", e.label_file},
                       {"instance_hash", e.instance_hash},
                       {"objective", e.objective},
                       {"solve_seconds", e.solve_seconds}});
  j["entries"] = entries;
  write_file(dir + "/manifest.json", j.dump(2));
}

DatasetManifest read_manifest(const std::string& dir) {
  json j = parse_json(read_file(dir + "/manifest.json"), "dataset manifest");
  reject_unknown_keys(j, {"version", "master_seed", "multiplier", "ev_counts", "entries"},
                      "dataset manifest");
  check_schema_version(j, 1, "dataset manifest");
  DatasetManifest m;
  m.master_seed = j.at("master_seed").get<uint64_t>();
  m.multiplier = j.at("multiplier").get<int>();
  m.ev_counts = j.at("ev_counts").get<std::vector<int>>();
  for (const json& je : j.at("entries")) {
    reject_unknown_keys(je,
                        {"index", "seed", "fleet_size", "instance_file", "feature_file",
                         "label_file", "instance_hash", "objective", "solve_seconds"},
                        "dataset entry");
    DatasetEntry e;
    e.index = je.at("index").get<int>();
    e.seed = je.at("seed").get<uint64_t>();
    e.fleet_size = je.at("fleet_size").get<int>();
    e.instance_file = je.at("instance_file").get<std::string>();
    e.feature_file = je.at("feature_file").get<std::string>();
    e.label_file = je.at("label_file").get<std::string>();
    e.instance_hash = je.at("instance_hash").get<std::string>();
    e.objective = je.at("objective").get<double>();
    e.solve_seconds = je.at("solve_seconds").get<double>();
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::string dataset_content_hash(const std::string& dir) {
  std::string acc;
  for (const char* sub : {"instances", "features", "labels"}) {
    std::string p = dir + "/" + sub;
    if (std::filesystem::exists(p)) acc += std::string(sub) + ":" + sha256_dir(p) + "\n";
  }
  return sha256_hex(acc);
}

DatasetManifest generate_dataset(const std::string& dir, const netmodel::Network& net,
                                 const GenConfig& cfg, uint64_t master_seed, int n,
                                 const std::vector<int>& ev_counts, int multiplier) {
  if (n < 1) throw Error(ErrorCategory::config, "dataset size must be >= 1");
  if (ev_counts.empty()) throw Error(ErrorCategory::config, "ev_counts must be nonempty");

  DatasetManifest m;
  m.master_seed = master_seed;
  m.multiplier = multiplier;
  m.ev_counts = ev_counts;
  for (int i = 0; i < n; ++i) {
    DatasetEntry e;
    e.index = i;
    e.seed = child_seed(master_seed, static_cast<uint64_t>(i));
    e.fleet_size = ev_counts[i % ev_counts.size()];
    ProblemInstance inst = generate_instance(net, cfg, e.seed, e.fleet_size);
    e.instance_file = "instances/" + idx_name(i) + ".json";
    e.feature_file = "features/" + idx_name(i) + ".bin";
    write_instance(dir + "/" + e.instance_file, inst);
    write_tensor(dir + "/" + e.feature_file, encode_features(inst, 0).tokens);
    e.instance_hash = sha256_file(dir + "/" + e.instance_file);
    m.entries.push_back(std::move(e));
  }
  write_manifest(dir, m);
  return m;
}

void split_indices(int n, double val_fraction, uint64_t seed, std::vector<int>& train,
                   std::vector<int>& val) {
  if (n < 2) throw Error(ErrorCategory::config, "need at least 2 samples to split");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx.begin(), idx.end());
  int n_val = static_cast<int>(std::llround(n * val_fraction));
  n_val = std::max(1, std::min(n - 1, n_val));
  val.assign(idx.begin(), idx.begin() + n_val);
  train.assign(idx.begin() + n_val, idx.end());
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
}

}  // namespace evjrs::instances
