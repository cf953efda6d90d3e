#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace evjrs::netmodel {

struct TransportEdge {
  int origin = 0;
  int destination = 0;
  int normal_travel_spans = 1;
  int congested_travel_spans = 1;
  double move_energy = 0.0;  // kW drawn per span while traversing
};

struct TransportNetwork {
  std::vector<int> nodes;
  std::vector<TransportEdge> edges;
  std::vector<int> cs_nodes;
};

struct DistributionLine {
  int from_bus = 0;
  int to_bus = 0;
  double resistance = 0.0;  // p.u.
  double reactance = 0.0;   // p.u.
  double flow_limit = 0.0;  // kVA
};

struct DistributionGenerator {
  int bus = 0;
  double p_min = 0.0;  // kW
  double p_max = 0.0;
  double q_min = 0.0;  // kvar
  double q_max = 0.0;
  double fuel_cost = 0.0;  // $/kWh
};

struct DistributionNetwork {
  std::vector<int> buses;
  std::vector<DistributionLine> lines;
  std::vector<DistributionGenerator> dgs;
  std::vector<int> pv_units;       // bus per PV unit
  std::map<int, int> cs_bus_map;   // CS node -> bus
  double v_min_sq = 0.81;          // p.u.^2
  double v_max_sq = 1.21;
  int root_bus = 0;
  double s_base_kva = 1000.0;      // base for p.u. conversion of line flows
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

enum class ArcKind { idle = 0, normal_travel = 1, congestion_travel = 2, exit = 3 };

const char* arc_kind_name(ArcKind k);

struct TsnArc {
  int id = 0;
  ArcKind kind = ArcKind::idle;
  int origin = 0;       // physical node id or virtual waypoint id
  int destination = 0;
  int span = 0;         // 0-based; span s bridges timesteps s and s+1
  double energy = 0.0;  // kW drawn while on this arc
};

// Conservation pair for one node at one span boundary: flow leaving the node
// at span s+1 must equal flow entering it at span s.
struct ConservationPair {
  int node = 0;
  int span = 0;  // boundary between span and span+1
  std::vector<int> from_ids;  // arcs with this origin at span+1
  std::vector<int> to_ids;    // arcs with this destination at span
};

struct TimeSpaceNetwork {
  int horizon = 0;  // |T|
  int spans = 0;    // |S| = |T| - 1
  std::vector<TsnArc> arcs;  // canonical order; arc id == index

  std::vector<int> ca;         // enabled under congestion (entries + always_on)
  std::vector<int> nca;        // enabled without congestion (entries + always_on)
  std::vector<int> always_on;  // ca intersect nca: exit + idle arcs
  std::vector<int> travel_arcs;  // all non-idle arcs

  // idle arc of each CS node per span: idle_cs_arcs.at(cs)[s]
  std::map<int, std::vector<int>> idle_cs_arcs;

  std::vector<ConservationPair> conservation_pairs;

  // node -> arcs with that origin, all spans (paper's A^{i+})
  std::map<int, std::vector<int>> arrival_sets;

  int first_virtual_node = 0;  // node ids >= this are virtual

  bool is_virtual(int node) const { return node >= first_virtual_node; }

  // Arc id lists per query; see the per-function contracts below.
  std::vector<int> enabled(int span, bool congestion) const;
  const std::vector<int>& arrivals(int node) const;  // throws on unknown node
  std::vector<int> arrivals_at_span(int node, int span) const;
};

// Checks every structural invariant of both networks and returns the list of
// violations (empty iff both are well formed).
ValidationReport validate_network(const TransportNetwork& tn, const DistributionNetwork& dn);

// Builds the time-expanded network over `horizon` timesteps. Travel over an
// edge is a chain of one-span hops: the first hop is the gated entry arc
// (normal or congestion kind), the remaining hops run through auto-generated
// virtual waypoints as always-enabled exit arcs, so a vehicle that enters a
// chain can always finish it whatever the congestion flag does afterwards.
// A congested alternative exists only for edges with
// congested_travel_spans > normal_travel_spans.
TimeSpaceNetwork build_tsn(const TransportNetwork& tn, int horizon);

// Earliest reachable timestep per node starting from `start_node` at
// timestep 0 under the given per-span congestion flags. Unreachable nodes
// are absent. Used for schedule feasibility checks.
std::map<int, int> earliest_arrival(const TimeSpaceNetwork& tsn, int start_node,
                                    const std::vector<int>& congestion, int start_timestep = 0);

// JSON (de)serialization of the network description file. The parser rejects
// unknown keys.  Sections: "transport", "distribution".
struct Network {
  TransportNetwork transport;
  DistributionNetwork distribution;
};

std::string network_to_json(const Network& net);
Network network_from_json(const std::string& text);

}  // namespace evjrs::netmodel
