#include "evjrs/netmodel.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <queue>
#include <set>
#include <sstream>

#include "evjrs/common.hpp"
#include "evjrs/jsonutil.hpp"

namespace evjrs::netmodel {

using nlohmann::json;

const char* arc_kind_name(ArcKind k) {
  switch (k) {
    case ArcKind::idle: return "idle";
    case ArcKind::normal_travel: return "normal_travel";
    case ArcKind::congestion_travel: return "congestion_travel";
    case ArcKind::exit: return "exit";
  }
  return "?";
}

namespace {

int kind_rank(ArcKind k) { return static_cast<int>(k); }

template <typename T>
bool contains(const std::vector<T>& v, const T& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

void check_unique(const std::vector<int>& v, const std::string& what, ValidationReport& rep) {
  std::set<int> seen;
  for (int x : v) {
    if (!seen.insert(x).second)
      rep.violations.push_back(what + ": duplicate id " + std::to_string(x));
  }
}

}  // namespace

ValidationReport validate_network(const TransportNetwork& tn, const DistributionNetwork& dn) {
  ValidationReport rep;

  check_unique(tn.nodes, "transport nodes", rep);
  std::set<int> nodes(tn.nodes.begin(), tn.nodes.end());
  std::set<std::pair<int, int>> edge_keys;
  for (const auto& e : tn.edges) {
    std::string tag = "transport edge (" + std::to_string(e.origin) + "->" +
                      std::to_string(e.destination) + ")";
    if (!nodes.count(e.origin) || !nodes.count(e.destination))
      rep.violations.push_back(tag + ": endpoint is not a declared node");
    if (e.origin == e.destination)
      rep.violations.push_back(tag + ": self loop (idling needs no edge)");
    if (e.normal_travel_spans < 1)
      rep.violations.push_back(tag + ": normal_travel_spans must be >= 1");
    if (e.congested_travel_spans < e.normal_travel_spans)
      rep.violations.push_back(tag + ": congested_travel_spans < normal_travel_spans");
    if (e.move_energy < 0.0) rep.violations.push_back(tag + ": move_energy < 0");
    if (!edge_keys.insert({e.origin, e.destination}).second)
      rep.violations.push_back(tag + ": duplicate edge");
  }
  check_unique(tn.cs_nodes, "transport cs_nodes", rep);
  for (int cs : tn.cs_nodes)
    if (!nodes.count(cs))
      rep.violations.push_back("cs node " + std::to_string(cs) + " is not a declared node");

  check_unique(dn.buses, "distribution buses", rep);
  std::set<int> buses(dn.buses.begin(), dn.buses.end());
  if (!buses.count(dn.root_bus))
    rep.violations.push_back("root_bus " + std::to_string(dn.root_bus) + " is not a declared bus");
  if (dn.s_base_kva <= 0.0) rep.violations.push_back("s_base_kva must be > 0");
  if (!(dn.v_min_sq < dn.v_max_sq)) rep.violations.push_back("v_min_sq must be < v_max_sq");

  for (const auto& l : dn.lines) {
    std::string tag = "line (" + std::to_string(l.from_bus) + "-" + std::to_string(l.to_bus) + ")";
    if (!buses.count(l.from_bus) || !buses.count(l.to_bus))
      rep.violations.push_back(tag + ": endpoint is not a declared bus");
    if (l.resistance < 0.0 || l.reactance < 0.0)
      rep.violations.push_back(tag + ": negative impedance");
    if (l.flow_limit <= 0.0) rep.violations.push_back(tag + ": flow_limit must be > 0");
  }

  // Radiality: the undirected line graph must be a tree spanning all buses
  // from root_bus.
  {
    std::map<int, std::vector<int>> adj;
    bool endpoints_ok = true;
    for (const auto& l : dn.lines) {
      if (!buses.count(l.from_bus) || !buses.count(l.to_bus)) {
        endpoints_ok = false;
        continue;
      }
      adj[l.from_bus].push_back(l.to_bus);
      adj[l.to_bus].push_back(l.from_bus);
    }
    if (endpoints_ok && buses.count(dn.root_bus)) {
      if (dn.lines.size() + 1 != dn.buses.size()) {
        rep.violations.push_back("distribution network is not radial: " +
                                 std::to_string(dn.lines.size()) + " lines for " +
                                 std::to_string(dn.buses.size()) + " buses");
      } else {
        std::set<int> seen{dn.root_bus};
        std::queue<int> q;
        q.push(dn.root_bus);
        while (!q.empty()) {
          int b = q.front();
          q.pop();
          for (int nb : adj[b])
            if (seen.insert(nb).second) q.push(nb);
        }
        if (seen.size() != buses.size())
          rep.violations.push_back(
              "distribution network is not radial: not all buses reachable from root");
      }
    }
  }

  for (const auto& g : dn.dgs) {
    std::string tag = "dg at bus " + std::to_string(g.bus);
    if (!buses.count(g.bus)) rep.violations.push_back(tag + ": bus not declared");
    if (g.p_min > g.p_max) rep.violations.push_back(tag + ": p_min > p_max");
    if (g.q_min > g.q_max) rep.violations.push_back(tag + ": q_min > q_max");
  }
  for (int bus : dn.pv_units)
    if (!buses.count(bus))
      rep.violations.push_back("pv unit at bus " + std::to_string(bus) + ": bus not declared");

  // Every CS node maps to exactly one declared bus; no stray mappings.
  for (int cs : tn.cs_nodes) {
    auto it = dn.cs_bus_map.find(cs);
    if (it == dn.cs_bus_map.end())
      rep.violations.push_back("cs node " + std::to_string(cs) + " has no bus mapping");
    else if (!buses.count(it->second))
      rep.violations.push_back("cs node " + std::to_string(cs) + " mapped to nonexistent bus " +
                               std::to_string(it->second));
  }
  for (const auto& [cs, bus] : dn.cs_bus_map)
    if (!contains(tn.cs_nodes, cs))
      rep.violations.push_back("cs_bus_map entry for " + std::to_string(cs) +
                               " which is not a cs node");

  return rep;
}

TimeSpaceNetwork build_tsn(const TransportNetwork& tn, int horizon) {
  if (horizon < 2)
    throw Error(ErrorCategory::validation,
                "invalid horizon " + std::to_string(horizon) + ": need at least 2 timesteps");

  TimeSpaceNetwork tsn;
  tsn.horizon = horizon;
  tsn.spans = horizon - 1;

  int max_node = 0;
  for (int n : tn.nodes) max_node = std::max(max_node, n);
  tsn.first_virtual_node = max_node + 1;
  int next_virtual = tsn.first_virtual_node;

  // Waypoint allocation is keyed to the edge list sorted by (origin,
  // destination) so the canonical arc order does not depend on input order.
  std::vector<TransportEdge> edges = tn.edges;
  std::sort(edges.begin(), edges.end(), [](const TransportEdge& a, const TransportEdge& b) {
    return std::tie(a.origin, a.destination) < std::tie(b.origin, b.destination);
  });

  struct Chain {
    ArcKind entry_kind;
    std::vector<int> path;  // origin, waypoints..., destination
    double energy;
  };
  std::vector<Chain> chains;
  for (const auto& e : edges) {
    {
      Chain c{ArcKind::normal_travel, {e.origin}, e.move_energy};
      for (int h = 1; h < e.normal_travel_spans; ++h) c.path.push_back(next_virtual++);
      c.path.push_back(e.destination);
      chains.push_back(std::move(c));
    }
    if (e.congested_travel_spans > e.normal_travel_spans) {
      Chain c{ArcKind::congestion_travel, {e.origin}, e.move_energy};
      for (int h = 1; h < e.congested_travel_spans; ++h) c.path.push_back(next_virtual++);
      c.path.push_back(e.destination);
      chains.push_back(std::move(c));
    }
  }

  std::vector<TsnArc> arcs;
  for (int node : tn.nodes)
    for (int s = 0; s < tsn.spans; ++s)
      arcs.push_back({0, ArcKind::idle, node, node, s, 0.0});

  for (const auto& c : chains) {
    int len = static_cast<int>(c.path.size()) - 1;
    for (int start = 0; start + len <= tsn.spans; ++start) {
      for (int h = 0; h < len; ++h) {
        ArcKind kind = h == 0 ? c.entry_kind : ArcKind::exit;
        arcs.push_back({0, kind, c.path[h], c.path[h + 1], start + h, c.energy});
      }
    }
  }

  std::sort(arcs.begin(), arcs.end(), [](const TsnArc& a, const TsnArc& b) {
    return std::make_tuple(a.span, kind_rank(a.kind), a.origin, a.destination) <
           std::make_tuple(b.span, kind_rank(b.kind), b.origin, b.destination);
  });
  for (size_t i = 0; i < arcs.size(); ++i) arcs[i].id = static_cast<int>(i);
  tsn.arcs = std::move(arcs);

  for (const auto& a : tsn.arcs) {
    bool on = a.kind == ArcKind::idle || a.kind == ArcKind::exit;
    if (on || a.kind == ArcKind::congestion_travel) tsn.ca.push_back(a.id);
    if (on || a.kind == ArcKind::normal_travel) tsn.nca.push_back(a.id);
    if (on) tsn.always_on.push_back(a.id);
    if (a.kind != ArcKind::idle) tsn.travel_arcs.push_back(a.id);
    tsn.arrival_sets[a.origin].push_back(a.id);
    if (!tsn.arrival_sets.count(a.destination)) tsn.arrival_sets[a.destination] = {};
  }

  for (int cs : tn.cs_nodes) {
    std::vector<int> per_span(tsn.spans, -1);
    for (const auto& a : tsn.arcs)
      if (a.kind == ArcKind::idle && a.origin == cs) per_span[a.span] = a.id;
    tsn.idle_cs_arcs[cs] = std::move(per_span);
  }

  // Conservation pairs: one per node per span boundary with any incident arc.
  std::map<int, std::vector<std::vector<int>>> out_by_node, in_by_node;
  for (const auto& a : tsn.arcs) {
    auto& out = out_by_node[a.origin];
    auto& in = in_by_node[a.destination];
    if (out.empty()) out.resize(tsn.spans);
    if (in.empty()) in.resize(tsn.spans);
    out[a.span].push_back(a.id);
    in[a.span].push_back(a.id);
  }
  std::set<int> all_nodes;
  for (const auto& a : tsn.arcs) {
    all_nodes.insert(a.origin);
    all_nodes.insert(a.destination);
  }
  for (int node : all_nodes) {
    for (int s = 0; s + 1 < tsn.spans; ++s) {
      std::vector<int> from, to;
      auto ot = out_by_node.find(node);
      if (ot != out_by_node.end() && !ot->second.empty()) from = ot->second[s + 1];
      auto it = in_by_node.find(node);
      if (it != in_by_node.end() && !it->second.empty()) to = it->second[s];
      if (from.empty() && to.empty()) continue;
      tsn.conservation_pairs.push_back({node, s, std::move(from), std::move(to)});
    }
  }

  return tsn;
}

std::vector<int> TimeSpaceNetwork::enabled(int span, bool congestion) const {
  const std::vector<int>& src = congestion ? ca : nca;
  std::vector<int> out;
  for (int id : src)
    if (arcs[id].span == span) out.push_back(id);
  return out;
}

const std::vector<int>& TimeSpaceNetwork::arrivals(int node) const {
  auto it = arrival_sets.find(node);
  if (it == arrival_sets.end())
    throw Error(ErrorCategory::validation, "unknown node " + std::to_string(node));
  return it->second;
}

std::vector<int> TimeSpaceNetwork::arrivals_at_span(int node, int span) const {
  std::vector<int> out;
  for (int id : arrivals(node))
    if (arcs[id].span == span) out.push_back(id);
  return out;
}

std::map<int, int> earliest_arrival(const TimeSpaceNetwork& tsn, int start_node,
                                    const std::vector<int>& congestion, int start_timestep) {
  std::map<int, std::vector<int>> out_by_node;
  for (const auto& a : tsn.arcs) out_by_node[a.origin].push_back(a.id);

  std::map<int, int> earliest;
  std::set<int> frontier{start_node};
  earliest[start_node] = start_timestep;
  for (int t = start_timestep; t < tsn.horizon - 1; ++t) {
    int s = t;  // span s bridges t and t+1
    bool jam = s < static_cast<int>(congestion.size()) && congestion[s] != 0;
    std::set<int> next;
    for (int node : frontier) {
      auto it = out_by_node.find(node);
      if (it == out_by_node.end()) continue;
      for (int id : it->second) {
        const TsnArc& a = tsn.arcs[id];
        if (a.span != s) continue;
        bool on = a.kind == ArcKind::idle || a.kind == ArcKind::exit ||
                  (jam ? a.kind == ArcKind::congestion_travel : a.kind == ArcKind::normal_travel);
        if (!on) continue;
        next.insert(a.destination);
        if (!earliest.count(a.destination)) earliest[a.destination] = t + 1;
      }
    }
    frontier = std::move(next);
  }
  return earliest;
}

std::string network_to_json(const Network& net) {
  json t;
  t["nodes"] = net.transport.nodes;
  t["edges"] = json::array();
  for (const auto& e : net.transport.edges)
    t["edges"].push_back({{"origin", e.origin},
                          {"destination", e.destination},
                          {"normal_travel_spans", e.normal_travel_spans},
                          {"congested_travel_spans", e.congested_travel_spans},
                          {"move_energy", e.move_energy}});
  t["cs_nodes"] = net.transport.cs_nodes;

  json d;
  d["buses"] = net.distribution.buses;
  d["lines"] = json::array();
  for (const auto& l : net.distribution.lines)
    d["lines"].push_back({{"from_bus", l.from_bus},
                          {"to_bus", l.to_bus},
                          {"resistance", l.resistance},
                          {"reactance", l.reactance},
                          {"flow_limit", l.flow_limit}});
  d["dgs"] = json::array();
  for (const auto& g : net.distribution.dgs)
    d["dgs"].push_back({{"bus", g.bus},
                        {"p_min", g.p_min},
                        {"p_max", g.p_max},
                        {"q_min", g.q_min},
                        {"q_max", g.q_max},
                        {"fuel_cost", g.fuel_cost}});
  d["pv_units"] = net.distribution.pv_units;
  json csmap = json::object();
  for (const auto& [cs, bus] : net.distribution.cs_bus_map) csmap[std::to_string(cs)] = bus;
  d["cs_bus_map"] = csmap;
  d["v_min_sq"] = net.distribution.v_min_sq;
  d["v_max_sq"] = net.distribution.v_max_sq;
  d["root_bus"] = net.distribution.root_bus;
  d["s_base_kva"] = net.distribution.s_base_kva;

  json out;
  out["transport"] = t;
  out["distribution"] = d;
  return out.dump(2);
}

Network network_from_json(const std::string& text) {
  json j = parse_json(text, "network file");
  reject_unknown_keys(j, {"transport", "distribution"}, "network file");
  if (!j.contains("transport") || !j.contains("distribution"))
    throw Error(ErrorCategory::validation, "network file needs transport and distribution sections");

  Network net;
  const json& t = j["transport"];
  reject_unknown_keys(t, {"nodes", "edges", "cs_nodes"}, "transport section");
  net.transport.nodes = t.at("nodes").get<std::vector<int>>();
  for (const auto& je : t.at("edges")) {
    reject_unknown_keys(je,
                        {"origin", "destination", "normal_travel_spans", "congested_travel_spans",
                         "move_energy"},
                        "transport edge");
    TransportEdge e;
    e.origin = je.at("origin").get<int>();
    e.destination = je.at("destination").get<int>();
    e.normal_travel_spans = je.at("normal_travel_spans").get<int>();
    e.congested_travel_spans = je.at("congested_travel_spans").get<int>();
    e.move_energy = je.at("move_energy").get<double>();
    net.transport.edges.push_back(e);
  }
  net.transport.cs_nodes = t.at("cs_nodes").get<std::vector<int>>();

  const json& d = j["distribution"];
  reject_unknown_keys(d,
                      {"buses", "lines", "dgs", "pv_units", "cs_bus_map", "v_min_sq", "v_max_sq",
                       "root_bus", "s_base_kva"},
                      "distribution section");
  net.distribution.buses = d.at("buses").get<std::vector<int>>();
  for (const auto& jl : d.at("lines")) {
    reject_unknown_keys(jl, {"from_bus", "to_bus", "resistance", "reactance", "flow_limit"},
                        "distribution line");
    DistributionLine l;
    l.from_bus = jl.at("from_bus").get<int>();
    l.to_bus = jl.at("to_bus").get<int>();
    l.resistance = jl.at("resistance").get<double>();
    l.reactance = jl.at("reactance").get<double>();
    l.flow_limit = jl.at("flow_limit").get<double>();
    net.distribution.lines.push_back(l);
  }
  for (const auto& jg : d.at("dgs")) {
    reject_unknown_keys(jg, {"bus", "p_min", "p_max", "q_min", "q_max", "fuel_cost"},
                        "distribution dg");
    DistributionGenerator g;
    g.bus = jg.at("bus").get<int>();
    g.p_min = jg.at("p_min").get<double>();
    g.p_max = jg.at("p_max").get<double>();
    g.q_min = jg.at("q_min").get<double>();
    g.q_max = jg.at("q_max").get<double>();
    g.fuel_cost = jg.at("fuel_cost").get<double>();
    net.distribution.dgs.push_back(g);
  }
  net.distribution.pv_units = d.at("pv_units").get<std::vector<int>>();
  for (const auto& [key, value] : d.at("cs_bus_map").items())
    net.distribution.cs_bus_map[std::stoi(key)] = value.get<int>();
  net.distribution.v_min_sq = d.at("v_min_sq").get<double>();
  net.distribution.v_max_sq = d.at("v_max_sq").get<double>();
  net.distribution.root_bus = d.at("root_bus").get<int>();
  net.distribution.s_base_kva = d.at("s_base_kva").get<double>();
  return net;
}

}  // namespace evjrs::netmodel
