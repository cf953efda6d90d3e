#include "evjrs/mip.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "evjrs/common.hpp"

namespace evjrs::mip {

using instances::ProblemInstance;
using netmodel::ArcKind;
using netmodel::TimeSpaceNetwork;

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::node_limit: return "node-limit";
    case SolveStatus::time_limit: return "time-limit";
    case SolveStatus::stall: return "stall";
  }
  return "?";
}

// ---- VarIndex ----

int VarIndex::routing(int sc, int k, int arc) const {
  return (sc * n_ev + k) * n_per_ev + arc;
}
int VarIndex::charge_flag(int sc, int k, int cs_idx, int t) const {
  return (sc * n_ev + k) * n_per_ev + n_arcs + cs_idx * horizon + t;
}
int VarIndex::discharge_flag(int sc, int k, int cs_idx, int t) const {
  return (sc * n_ev + k) * n_per_ev + n_arcs + n_cs * horizon + cs_idx * horizon + t;
}

int VarIndex::dg_p(int sc, int g, int t) const {
  return binary_count + sc * cont_per_sc + g * horizon + t;
}
int VarIndex::dg_q(int sc, int g, int t) const {
  return binary_count + sc * cont_per_sc + n_dg * horizon + g * horizon + t;
}
int VarIndex::ev_charge(int sc, int k, int cs_idx, int t) const {
  return binary_count + sc * cont_per_sc + 2 * n_dg * horizon + (k * n_cs + cs_idx) * horizon + t;
}
int VarIndex::ev_discharge(int sc, int k, int cs_idx, int t) const {
  return ev_charge(sc, k, cs_idx, t) + n_ev * n_cs * horizon;
}
int VarIndex::ev_move(int sc, int k, int t) const {
  return binary_count + sc * cont_per_sc + 2 * n_dg * horizon + 2 * n_ev * n_cs * horizon +
         k * horizon + t;
}
int VarIndex::energy(int sc, int k, int t) const { return ev_move(sc, k, t) + n_ev * horizon; }
int VarIndex::line_p(int sc, int l, int t) const {
  return binary_count + sc * cont_per_sc + 2 * n_dg * horizon + 2 * n_ev * n_cs * horizon +
         2 * n_ev * horizon + l * horizon + t;
}
int VarIndex::line_q(int sc, int l, int t) const { return line_p(sc, l, t) + n_line * horizon; }
int VarIndex::volt(int sc, int b_idx, int t) const {
  return binary_count + sc * cont_per_sc + 2 * n_dg * horizon + 2 * n_ev * n_cs * horizon +
         2 * n_ev * horizon + 2 * n_line * horizon + b_idx * horizon + t;
}
int VarIndex::total() const { return binary_count + n_sc * cont_per_sc; }

std::string VarIndex::col_name(int col) const {
  char buf[64];
  if (col < binary_count) {
    int per = n_per_ev;
    int sk = col / per, rem = col % per;
    int sc = sk / n_ev, k = sk % n_ev;
    if (rem < n_arcs) {
      std::snprintf(buf, sizeof(buf), "I_sc%d_ev%d_a%d", sc, k, rem);
    } else if (rem < n_arcs + n_cs * horizon) {
      int r = rem - n_arcs;
      std::snprintf(buf, sizeof(buf), "Ic_sc%d_ev%d_cs%d_t%d", sc, k, cs_nodes[r / horizon],
                    r % horizon);
    } else {
      int r = rem - n_arcs - n_cs * horizon;
      std::snprintf(buf, sizeof(buf), "Id_sc%d_ev%d_cs%d_t%d", sc, k, cs_nodes[r / horizon],
                    r % horizon);
    }
    return buf;
  }
  int rem = col - binary_count;
  int sc = rem / cont_per_sc;
  int r = rem % cont_per_sc;
  int T = horizon;
  if (r < n_dg * T) {
    std::snprintf(buf, sizeof(buf), "Pg_sc%d_g%d_t%d", sc, r / T, r % T);
    return buf;
  }
  r -= n_dg * T;
  if (r < n_dg * T) {
    std::snprintf(buf, sizeof(buf), "Qg_sc%d_g%d_t%d", sc, r / T, r % T);
    return buf;
  }
  r -= n_dg * T;
  if (r < n_ev * n_cs * T) {
    int k = r / (n_cs * T), rr = r % (n_cs * T);
    std::snprintf(buf, sizeof(buf), "Pc_sc%d_ev%d_cs%d_t%d", sc, k, cs_nodes[rr / T], rr % T);
    return buf;
  }
  r -= n_ev * n_cs * T;
  if (r < n_ev * n_cs * T) {
    int k = r / (n_cs * T), rr = r % (n_cs * T);
    std::snprintf(buf, sizeof(buf), "Pd_sc%d_ev%d_cs%d_t%d", sc, k, cs_nodes[rr / T], rr % T);
    return buf;
  }
  r -= n_ev * n_cs * T;
  if (r < n_ev * T) {
    std::snprintf(buf, sizeof(buf), "Pm_sc%d_ev%d_t%d", sc, r / T, r % T);
    return buf;
  }
  r -= n_ev * T;
  if (r < n_ev * T) {
    std::snprintf(buf, sizeof(buf), "E_sc%d_ev%d_t%d", sc, r / T, r % T);
    return buf;
  }
  r -= n_ev * T;
  if (r < n_line * T) {
    std::snprintf(buf, sizeof(buf), "Pl_sc%d_l%d_t%d", sc, r / T, r % T);
    return buf;
  }
  r -= n_line * T;
  if (r < n_line * T) {
    std::snprintf(buf, sizeof(buf), "Ql_sc%d_l%d_t%d", sc, r / T, r % T);
    return buf;
  }
  r -= n_line * T;
  std::snprintf(buf, sizeof(buf), "V_sc%d_b%d_t%d", sc, r / T, r % T);
  return buf;
}

VarIndex make_var_index(const TimeSpaceNetwork& tsn, const netmodel::Network& net, int n_ev,
                        int n_sc) {
  VarIndex ix;
  ix.horizon = tsn.horizon;
  ix.spans = tsn.spans;
  ix.n_arcs = static_cast<int>(tsn.arcs.size());
  ix.cs_nodes = net.transport.cs_nodes;
  std::sort(ix.cs_nodes.begin(), ix.cs_nodes.end());
  ix.n_cs = static_cast<int>(ix.cs_nodes.size());
  ix.n_ev = n_ev;
  ix.n_sc = n_sc;
  ix.n_dg = static_cast<int>(net.distribution.dgs.size());
  ix.n_line = static_cast<int>(net.distribution.lines.size());
  ix.n_bus = static_cast<int>(net.distribution.buses.size());
  ix.n_per_ev = ix.n_arcs + 2 * ix.n_cs * ix.horizon;
  ix.binary_count = n_sc * n_ev * ix.n_per_ev;
  int T = ix.horizon;
  ix.cont_per_sc = 2 * ix.n_dg * T + 2 * n_ev * ix.n_cs * T + 2 * n_ev * T + 2 * ix.n_line * T +
                   ix.n_bus * T;
  return ix;
}

// ---- Assembly ----

namespace {

struct GridContext {
  // bus id -> positional index
  std::map<int, int> bus_idx;
  // per bus: lines ending here / leaving here (positional line indices)
  std::vector<std::vector<int>> lines_in, lines_out;
  // per bus: dg indices, pv indices, cs indices (into sorted cs_nodes)
  std::vector<std::vector<int>> dgs_at, pvs_at, cs_at;
};

GridContext grid_context(const netmodel::Network& net, const std::vector<int>& cs_nodes) {
  const auto& dn = net.distribution;
  GridContext g;
  for (size_t i = 0; i < dn.buses.size(); ++i) g.bus_idx[dn.buses[i]] = static_cast<int>(i);
  g.lines_in.resize(dn.buses.size());
  g.lines_out.resize(dn.buses.size());
  g.dgs_at.resize(dn.buses.size());
  g.pvs_at.resize(dn.buses.size());
  g.cs_at.resize(dn.buses.size());
  for (size_t l = 0; l < dn.lines.size(); ++l) {
    g.lines_in[g.bus_idx.at(dn.lines[l].to_bus)].push_back(static_cast<int>(l));
    g.lines_out[g.bus_idx.at(dn.lines[l].from_bus)].push_back(static_cast<int>(l));
  }
  for (size_t d = 0; d < dn.dgs.size(); ++d)
    g.dgs_at[g.bus_idx.at(dn.dgs[d].bus)].push_back(static_cast<int>(d));
  for (size_t p = 0; p < dn.pv_units.size(); ++p)
    g.pvs_at[g.bus_idx.at(dn.pv_units[p])].push_back(static_cast<int>(p));
  for (size_t c = 0; c < cs_nodes.size(); ++c)
    g.cs_at[g.bus_idx.at(dn.cs_bus_map.at(cs_nodes[c]))].push_back(static_cast<int>(c));
  return g;
}

std::string rname(const char* fam, int sc, int a, int b, int c = -1) {
  char buf[64];
  if (c >= 0)
    std::snprintf(buf, sizeof(buf), "%s_sc%d_%d_%d_%d", fam, sc, a, b, c);
  else
    std::snprintf(buf, sizeof(buf), "%s_sc%d_%d_%d", fam, sc, a, b);
  return buf;
}

}  // namespace

MipModel build_model(const ProblemInstance& inst, bool deterministic, int scenario,
                     const BuildOptions& opts) {
  if (inst.horizon < 2) throw Error(ErrorCategory::validation, "instance horizon must be >= 2");
  int spans = inst.horizon - 1;
  for (const auto& j : inst.schedule.jobs) {
    if (j.span < 0 || j.span >= spans)
      throw Error(ErrorCategory::validation,
                  "job span " + std::to_string(j.span) + " outside [0, " + std::to_string(spans) +
                      "): infeasible schedule structure");
    if (j.span == 0 && j.node != inst.fleet.evs.at(j.ev).start_node)
      throw Error(ErrorCategory::validation,
                  "job at span 0 conflicts with the start position of ev " + std::to_string(j.ev));
  }
  if (deterministic && (scenario < 0 || scenario >= inst.scenarios.count()))
    throw Error(ErrorCategory::validation, "scenario index out of range");

  TimeSpaceNetwork tsn = netmodel::build_tsn(inst.network.transport, inst.horizon);
  int n_sc = deterministic ? 1 : inst.scenarios.count();
  int e = inst.fleet_size();
  int T = inst.horizon;
  double dt = inst.dt_hours();
  const auto& dn = inst.network.distribution;

  MipModel m;
  m.deterministic = deterministic;
  m.scenario = deterministic ? scenario : -1;
  m.index = make_var_index(tsn, inst.network, e, n_sc);
  const VarIndex& ix = m.index;

  int n = ix.total();
  m.obj.assign(n, 0.0);
  m.lo.assign(n, 0.0);
  m.hi.assign(n, 0.0);
  m.is_binary.assign(n, 0);

  double max_move = 0.0;
  for (const auto& a : tsn.arcs) max_move = std::max(max_move, a.energy);

  // Bounds and objective.
  for (int sc = 0; sc < n_sc; ++sc) {
    double w = deterministic ? 1.0 : inst.scenarios.probabilities[sc];
    for (int k = 0; k < e; ++k) {
      for (int a = 0; a < ix.n_arcs; ++a) {
        int col = ix.routing(sc, k, a);
        m.hi[col] = 1.0;
        m.is_binary[col] = 1;
      }
      for (int ci = 0; ci < ix.n_cs; ++ci) {
        for (int t = 0; t < T; ++t) {
          int c1 = ix.charge_flag(sc, k, ci, t), c2 = ix.discharge_flag(sc, k, ci, t);
          m.hi[c1] = t == 0 ? 0.0 : 1.0;  // no span precedes the first timestep
          m.hi[c2] = t == 0 ? 0.0 : 1.0;
          m.is_binary[c1] = m.is_binary[c2] = 1;
          int p1 = ix.ev_charge(sc, k, ci, t), p2 = ix.ev_discharge(sc, k, ci, t);
          m.hi[p1] = t == 0 ? 0.0 : inst.fleet.evs[k].p_ev_max;
          m.hi[p2] = t == 0 ? 0.0 : inst.fleet.evs[k].p_ev_max;
          m.obj[p1] += w * inst.fleet.price_charge * dt;
          m.obj[p2] -= w * inst.fleet.price_discharge * dt;
        }
      }
      for (int t = 0; t < T; ++t) {
        int pm = ix.ev_move(sc, k, t);
        m.hi[pm] = t == 0 ? 0.0 : max_move;
        int en = ix.energy(sc, k, t);
        if (t == 0) {
          m.lo[en] = m.hi[en] = inst.fleet.evs[k].e_init;
        } else {
          m.lo[en] = inst.fleet.evs[k].e_min;
          m.hi[en] = inst.fleet.evs[k].e_max;
        }
      }
    }
    for (int g = 0; g < ix.n_dg; ++g) {
      for (int t = 0; t < T; ++t) {
        m.lo[ix.dg_p(sc, g, t)] = dn.dgs[g].p_min;
        m.hi[ix.dg_p(sc, g, t)] = dn.dgs[g].p_max;
        m.lo[ix.dg_q(sc, g, t)] = dn.dgs[g].q_min;
        m.hi[ix.dg_q(sc, g, t)] = dn.dgs[g].q_max;
        m.obj[ix.dg_p(sc, g, t)] += w * dn.dgs[g].fuel_cost * dt;
      }
    }
    for (int l = 0; l < ix.n_line; ++l) {
      for (int t = 0; t < T; ++t) {
        m.lo[ix.line_p(sc, l, t)] = -dn.lines[l].flow_limit;
        m.hi[ix.line_p(sc, l, t)] = dn.lines[l].flow_limit;
        m.lo[ix.line_q(sc, l, t)] = -dn.lines[l].flow_limit;
        m.hi[ix.line_q(sc, l, t)] = dn.lines[l].flow_limit;
      }
    }
    for (int b = 0; b < ix.n_bus; ++b) {
      bool root = dn.buses[b] == dn.root_bus;
      for (int t = 0; t < T; ++t) {
        m.lo[ix.volt(sc, b, t)] = root ? 1.0 : dn.v_min_sq;
        m.hi[ix.volt(sc, b, t)] = root ? 1.0 : dn.v_max_sq;
      }
    }
  }

  // Rows.
  GridContext gc = grid_context(inst.network, ix.cs_nodes);
  std::map<int, int> cs_pos;
  for (int ci = 0; ci < ix.n_cs; ++ci) cs_pos[ix.cs_nodes[ci]] = ci;

  for (int sc = 0; sc < n_sc; ++sc) {
    int src_sc = deterministic ? scenario : sc;
    const Mat& solar = inst.scenarios.solar[src_sc];

    for (int k = 0; k < e; ++k) {
      // Start position.
      {
        Row r;
        r.name = rname("start", sc, k, 0);
        for (int id : tsn.arrivals_at_span(inst.fleet.evs[k].start_node, 0)) {
          r.cols.push_back(ix.routing(sc, k, id));
          r.coefs.push_back(1.0);
        }
        r.sense = 'E';
        r.rhs = 1.0;
        m.rows.push_back(std::move(r));
      }
      // Traffic-state selection and one-arc-per-span.
      for (int s = 0; s < spans; ++s) {
        Row r2;
        r2.name = rname("traffic", sc, k, s);
        for (int id : tsn.enabled(s, inst.congestion.flags[s] != 0)) {
          r2.cols.push_back(ix.routing(sc, k, id));
          r2.coefs.push_back(1.0);
        }
        r2.sense = 'E';
        r2.rhs = 1.0;
        m.rows.push_back(std::move(r2));

        Row r3;
        r3.name = rname("onearc", sc, k, s);
        for (const auto& a : tsn.arcs)
          if (a.span == s) {
            r3.cols.push_back(ix.routing(sc, k, a.id));
            r3.coefs.push_back(1.0);
          }
        r3.sense = 'E';
        r3.rhs = 1.0;
        m.rows.push_back(std::move(r3));
      }
      // Flow conservation.
      for (size_t p = 0; p < tsn.conservation_pairs.size(); ++p) {
        const auto& cp = tsn.conservation_pairs[p];
        Row r;
        r.name = rname("cons", sc, k, static_cast<int>(p));
        for (int id : cp.from_ids) {
          r.cols.push_back(ix.routing(sc, k, id));
          r.coefs.push_back(1.0);
        }
        for (int id : cp.to_ids) {
          r.cols.push_back(ix.routing(sc, k, id));
          r.coefs.push_back(-1.0);
        }
        r.sense = 'E';
        r.rhs = 0.0;
        m.rows.push_back(std::move(r));
      }
      // Job schedules.
      int jn = 0;
      for (const auto& j : inst.schedule.jobs) {
        if (j.ev != k) continue;
        Row r;
        r.name = rname("job", sc, k, jn++);
        for (int id : tsn.arrivals_at_span(j.node, j.span)) {
          r.cols.push_back(ix.routing(sc, k, id));
          r.coefs.push_back(1.0);
        }
        r.sense = 'E';
        r.rhs = 1.0;
        m.rows.push_back(std::move(r));
      }
      // Charging licensed by idling at the CS over the previous span.
      for (int ci = 0; ci < ix.n_cs; ++ci) {
        const auto& idle = tsn.idle_cs_arcs.at(ix.cs_nodes[ci]);
        for (int t = 1; t < T; ++t) {
          Row r;
          r.name = rname("license", sc, k, ci, t);
          r.cols = {ix.charge_flag(sc, k, ci, t), ix.discharge_flag(sc, k, ci, t),
                    ix.routing(sc, k, idle[t - 1])};
          r.coefs = {1.0, 1.0, -1.0};
          r.sense = 'L';
          r.rhs = 0.0;
          m.rows.push_back(std::move(r));
        }
      }
      // Travel draw linkage.
      for (int t = 1; t < T; ++t) {
        Row r;
        r.name = rname("move", sc, k, t);
        r.cols.push_back(ix.ev_move(sc, k, t));
        r.coefs.push_back(1.0);
        for (int id : tsn.travel_arcs) {
          const auto& a = tsn.arcs[id];
          if (a.span == t - 1 && a.energy != 0.0) {
            r.cols.push_back(ix.routing(sc, k, id));
            r.coefs.push_back(-a.energy);
          }
        }
        r.sense = 'E';
        r.rhs = 0.0;
        m.rows.push_back(std::move(r));
      }
      // Rate caps tied to the flags.
      for (int ci = 0; ci < ix.n_cs; ++ci) {
        for (int t = 1; t < T; ++t) {
          Row rc;
          rc.name = rname("capc", sc, k, ci, t);
          rc.cols = {ix.ev_charge(sc, k, ci, t), ix.charge_flag(sc, k, ci, t)};
          rc.coefs = {1.0, -inst.fleet.evs[k].p_ev_max};
          rc.sense = 'L';
          rc.rhs = 0.0;
          m.rows.push_back(std::move(rc));

          Row rd;
          rd.name = rname("capd", sc, k, ci, t);
          rd.cols = {ix.ev_discharge(sc, k, ci, t), ix.discharge_flag(sc, k, ci, t)};
          rd.coefs = {1.0, -inst.fleet.evs[k].p_ev_max};
          rd.sense = 'L';
          rd.rhs = 0.0;
          m.rows.push_back(std::move(rd));
        }
      }
      // Energy balance recursion.
      double eta = inst.fleet.eta;
      for (int t = 1; t < T; ++t) {
        Row r;
        r.name = rname("energy", sc, k, t);
        r.cols = {ix.energy(sc, k, t), ix.energy(sc, k, t - 1)};
        r.coefs = {1.0, -1.0};
        for (int ci = 0; ci < ix.n_cs; ++ci) {
          r.cols.push_back(ix.ev_charge(sc, k, ci, t));
          r.coefs.push_back(-dt * (1.0 - eta));
          r.cols.push_back(ix.ev_discharge(sc, k, ci, t));
          r.coefs.push_back(dt * (1.0 + eta));
        }
        r.cols.push_back(ix.ev_move(sc, k, t));
        r.coefs.push_back(dt * (1.0 + eta));
        r.sense = 'E';
        r.rhs = 0.0;
        m.rows.push_back(std::move(r));
      }
      if (opts.terminal_energy) {
        Row r;
        r.name = rname("terminal", sc, k, 0);
        r.cols = {ix.energy(sc, k, T - 1)};
        r.coefs = {-1.0};
        r.sense = 'L';
        r.rhs = -inst.fleet.evs[k].e_init;
        m.rows.push_back(std::move(r));
      }
    }

    // Grid: bus balance, voltage drops.
    for (int b = 0; b < ix.n_bus; ++b) {
      for (int t = 0; t < T; ++t) {
        Row rp;
        rp.name = rname("busp", sc, b, t);
        Row rq;
        rq.name = rname("busq", sc, b, t);
        for (int l : gc.lines_in[b]) {
          rp.cols.push_back(ix.line_p(sc, l, t));
          rp.coefs.push_back(1.0);
          rq.cols.push_back(ix.line_q(sc, l, t));
          rq.coefs.push_back(1.0);
        }
        for (int l : gc.lines_out[b]) {
          rp.cols.push_back(ix.line_p(sc, l, t));
          rp.coefs.push_back(-1.0);
          rq.cols.push_back(ix.line_q(sc, l, t));
          rq.coefs.push_back(-1.0);
        }
        for (int g : gc.dgs_at[b]) {
          rp.cols.push_back(ix.dg_p(sc, g, t));
          rp.coefs.push_back(1.0);
          rq.cols.push_back(ix.dg_q(sc, g, t));
          rq.coefs.push_back(1.0);
        }
        for (int ci : gc.cs_at[b]) {
          for (int k = 0; k < e; ++k) {
            rp.cols.push_back(ix.ev_discharge(sc, k, ci, t));
            rp.coefs.push_back(1.0);
            rp.cols.push_back(ix.ev_charge(sc, k, ci, t));
            rp.coefs.push_back(-1.0);
          }
        }
        double pv = 0.0;
        for (int p : gc.pvs_at[b]) pv += solar(p, t);
        rp.sense = 'E';
        rp.rhs = inst.loads.active(b, t) - pv;
        rq.sense = 'E';
        rq.rhs = inst.loads.reactive(b, t);
        m.rows.push_back(std::move(rp));
        m.rows.push_back(std::move(rq));
      }
    }
    for (int l = 0; l < ix.n_line; ++l) {
      const auto& ln = dn.lines[l];
      int bi = gc.bus_idx.at(ln.from_bus), bj = gc.bus_idx.at(ln.to_bus);
      for (int t = 0; t < T; ++t) {
        Row r;
        r.name = rname("vdrop", sc, l, t);
        r.cols = {ix.volt(sc, bj, t), ix.volt(sc, bi, t), ix.line_p(sc, l, t),
                  ix.line_q(sc, l, t)};
        r.coefs = {1.0, -1.0, 2.0 * ln.resistance / dn.s_base_kva,
                   2.0 * ln.reactance / dn.s_base_kva};
        r.sense = 'E';
        r.rhs = 0.0;
        m.rows.push_back(std::move(r));
      }
    }
  }

  return m;
}

MipModel apply_fixings(const MipModel& model, const PartialAssignment& pa) {
  MipModel out = model;
  for (const auto& [col, val] : pa.fixes) {
    if (col < 0 || col >= out.n_cols() || !out.is_binary[col])
      throw Error(ErrorCategory::validation,
                  "fixing targets non-binary column " + std::to_string(col));
    if (val != 0 && val != 1)
      throw Error(ErrorCategory::validation, "fixing value must be 0 or 1");
    out.lo[col] = out.hi[col] = static_cast<double>(val);
  }
  return out;
}

// ---- Independent verifier ----

namespace {

struct Checker {
  ViolationReport rep;
  double tol;

  void residual(double res, const std::string& what) {
    double a = std::abs(res);
    rep.max_residual = std::max(rep.max_residual, a);
    if (a > tol) rep.violations.push_back(what + " (residual " + std::to_string(a) + ")");
  }
  // one-sided: res <= 0 expected
  void slack(double res, const std::string& what) {
    double a = std::max(0.0, res);
    rep.max_residual = std::max(rep.max_residual, a);
    if (a > tol) rep.violations.push_back(what + " (residual " + std::to_string(a) + ")");
  }
};

}  // namespace

ViolationReport verify_solution(const ProblemInstance& inst, const Solution& sol,
                                bool deterministic, int scenario, const BuildOptions& opts,
                                double tol) {
  TimeSpaceNetwork tsn = netmodel::build_tsn(inst.network.transport, inst.horizon);
  int n_sc = deterministic ? 1 : inst.scenarios.count();
  int e = inst.fleet_size();
  int T = inst.horizon;
  int spans = T - 1;
  double dt = inst.dt_hours();
  const auto& dn = inst.network.distribution;
  VarIndex ix = make_var_index(tsn, inst.network, e, n_sc);
  if (static_cast<int>(sol.values.size()) != ix.total())
    throw Error(ErrorCategory::validation,
                "solution has " + std::to_string(sol.values.size()) + " columns, model needs " +
                    std::to_string(ix.total()));

  const std::vector<double>& x = sol.values;
  Checker ck;
  ck.tol = tol;

  GridContext gc = grid_context(inst.network, ix.cs_nodes);
  double recomputed_obj = 0.0;

  for (int sc = 0; sc < n_sc; ++sc) {
    int src_sc = deterministic ? scenario : sc;
    double w = deterministic ? 1.0 : inst.scenarios.probabilities[sc];
    const Mat& solar = inst.scenarios.solar[src_sc];
    std::string scs = "sc" + std::to_string(sc);

    for (int k = 0; k < e; ++k) {
      std::string who = scs + " ev" + std::to_string(k);
      // Integrality of all binaries.
      if (sol.status == SolveStatus::optimal) {
        for (int a = 0; a < ix.n_per_ev; ++a) {
          double v = x[(sc * e + k) * ix.n_per_ev + a];
          ck.residual(v - std::round(v), who + " binary not integral");
        }
      }
      // Per-span selection under the traffic state.
      for (int s = 0; s < spans; ++s) {
        bool jam = inst.congestion.flags[s] != 0;
        double sel = 0.0, all = 0.0, off = 0.0;
        for (const auto& a : tsn.arcs) {
          if (a.span != s) continue;
          double v = x[ix.routing(sc, k, a.id)];
          all += v;
          bool on = a.kind == ArcKind::idle || a.kind == ArcKind::exit ||
                    (jam ? a.kind == ArcKind::congestion_travel
                         : a.kind == ArcKind::normal_travel);
          (on ? sel : off) += v;
        }
        ck.residual(sel - 1.0, who + " traffic-state selection at span " + std::to_string(s));
        ck.residual(all - 1.0, who + " one-arc rule at span " + std::to_string(s));
        ck.residual(off, who + " disabled arc used at span " + std::to_string(s));
      }
      // Conservation.
      for (const auto& cp : tsn.conservation_pairs) {
        double from = 0.0, to = 0.0;
        for (int id : cp.from_ids) from += x[ix.routing(sc, k, id)];
        for (int id : cp.to_ids) to += x[ix.routing(sc, k, id)];
        ck.residual(from - to, who + " conservation at node " + std::to_string(cp.node) +
                                   " boundary " + std::to_string(cp.span));
      }
      // Start and jobs.
      {
        double s0 = 0.0;
        for (int id : tsn.arrivals_at_span(inst.fleet.evs[k].start_node, 0))
          s0 += x[ix.routing(sc, k, id)];
        ck.residual(s0 - 1.0, who + " start position");
      }
      for (const auto& j : inst.schedule.jobs) {
        if (j.ev != k) continue;
        double sj = 0.0;
        for (int id : tsn.arrivals_at_span(j.node, j.span)) sj += x[ix.routing(sc, k, id)];
        ck.residual(sj - 1.0, who + " job at node " + std::to_string(j.node) + " span " +
                                  std::to_string(j.span));
      }
      // Licensing, caps, move linkage, energy.
      for (int ci = 0; ci < ix.n_cs; ++ci) {
        const auto& idle = tsn.idle_cs_arcs.at(ix.cs_nodes[ci]);
        for (int t = 0; t < T; ++t) {
          double icf = x[ix.charge_flag(sc, k, ci, t)];
          double idf = x[ix.discharge_flag(sc, k, ci, t)];
          double pc = x[ix.ev_charge(sc, k, ci, t)];
          double pd = x[ix.ev_discharge(sc, k, ci, t)];
          std::string at = who + " cs" + std::to_string(ix.cs_nodes[ci]) + " t" +
                           std::to_string(t);
          if (t == 0) {
            ck.residual(icf + idf + pc + pd, at + " charge activity before the first span");
          } else {
            ck.slack(icf + idf - x[ix.routing(sc, k, idle[t - 1])], at + " charging license");
            ck.slack(pc - inst.fleet.evs[k].p_ev_max * icf, at + " charge rate cap");
            ck.slack(pd - inst.fleet.evs[k].p_ev_max * idf, at + " discharge rate cap");
          }
          ck.slack(-pc, at + " negative charge power");
          ck.slack(-pd, at + " negative discharge power");
          recomputed_obj += w * dt * (inst.fleet.price_charge * pc -
                                      inst.fleet.price_discharge * pd);
        }
      }
      for (int t = 0; t < T; ++t) {
        double pm = x[ix.ev_move(sc, k, t)];
        if (t == 0) {
          ck.residual(pm, who + " travel draw before the first span");
        } else {
          double expect = 0.0;
          for (int id : tsn.travel_arcs) {
            const auto& a = tsn.arcs[id];
            if (a.span == t - 1) expect += a.energy * x[ix.routing(sc, k, id)];
          }
          ck.residual(pm - expect, who + " travel draw at t" + std::to_string(t));
        }
      }
      {
        double eta = inst.fleet.eta;
        double e0 = x[ix.energy(sc, k, 0)];
        ck.residual(e0 - inst.fleet.evs[k].e_init, who + " initial energy");
        for (int t = 1; t < T; ++t) {
          double sum_c = 0.0, sum_d = 0.0;
          for (int ci = 0; ci < ix.n_cs; ++ci) {
            sum_c += x[ix.ev_charge(sc, k, ci, t)];
            sum_d += x[ix.ev_discharge(sc, k, ci, t)];
          }
          double rhs = x[ix.energy(sc, k, t - 1)] +
                       dt * ((1.0 - eta) * sum_c - (1.0 + eta) * (sum_d + x[ix.ev_move(sc, k, t)]));
          ck.residual(x[ix.energy(sc, k, t)] - rhs, who + " energy balance at t" +
                                                        std::to_string(t));
          ck.slack(inst.fleet.evs[k].e_min - x[ix.energy(sc, k, t)],
                   who + " energy floor at t" + std::to_string(t));
          ck.slack(x[ix.energy(sc, k, t)] - inst.fleet.evs[k].e_max,
                   who + " energy ceiling at t" + std::to_string(t));
        }
        if (opts.terminal_energy)
          ck.slack(inst.fleet.evs[k].e_init - x[ix.energy(sc, k, T - 1)],
                   who + " terminal energy");
      }
    }

    // Grid.
    for (int b = 0; b < ix.n_bus; ++b) {
      bool root = dn.buses[b] == dn.root_bus;
      for (int t = 0; t < T; ++t) {
        std::string at = scs + " bus" + std::to_string(dn.buses[b]) + " t" + std::to_string(t);
        double p = 0.0, q = 0.0;
        for (int l : gc.lines_in[b]) {
          p += x[ix.line_p(sc, l, t)];
          q += x[ix.line_q(sc, l, t)];
        }
        for (int l : gc.lines_out[b]) {
          p -= x[ix.line_p(sc, l, t)];
          q -= x[ix.line_q(sc, l, t)];
        }
        for (int g : gc.dgs_at[b]) {
          p += x[ix.dg_p(sc, g, t)];
          q += x[ix.dg_q(sc, g, t)];
        }
        for (int pu : gc.pvs_at[b]) p += solar(pu, t);
        for (int ci : gc.cs_at[b])
          for (int k = 0; k < e; ++k)
            p += x[ix.ev_discharge(sc, k, ci, t)] - x[ix.ev_charge(sc, k, ci, t)];
        ck.residual(p - inst.loads.active(b, t), at + " active balance");
        ck.residual(q - inst.loads.reactive(b, t), at + " reactive balance");

        double v = x[ix.volt(sc, b, t)];
        if (root) {
          ck.residual(v - 1.0, at + " root voltage");
        } else {
          ck.slack(dn.v_min_sq - v, at + " voltage floor");
          ck.slack(v - dn.v_max_sq, at + " voltage ceiling");
        }
      }
    }
    for (int l = 0; l < ix.n_line; ++l) {
      const auto& ln = dn.lines[l];
      int bi = gc.bus_idx.at(ln.from_bus), bj = gc.bus_idx.at(ln.to_bus);
      for (int t = 0; t < T; ++t) {
        std::string at = scs + " line" + std::to_string(l) + " t" + std::to_string(t);
        double p = x[ix.line_p(sc, l, t)], q = x[ix.line_q(sc, l, t)];
        ck.residual(x[ix.volt(sc, bj, t)] - x[ix.volt(sc, bi, t)] +
                        2.0 * (ln.resistance * p + ln.reactance * q) / dn.s_base_kva,
                    at + " voltage drop");
        ck.slack(std::abs(p) - ln.flow_limit, at + " active flow limit");
        ck.slack(std::abs(q) - ln.flow_limit, at + " reactive flow limit");
      }
    }
    for (int g = 0; g < ix.n_dg; ++g) {
      for (int t = 0; t < T; ++t) {
        std::string at = scs + " dg" + std::to_string(g) + " t" + std::to_string(t);
        double p = x[ix.dg_p(sc, g, t)], q = x[ix.dg_q(sc, g, t)];
        ck.slack(dn.dgs[g].p_min - p, at + " active floor");
        ck.slack(p - dn.dgs[g].p_max, at + " active ceiling");
        ck.slack(dn.dgs[g].q_min - q, at + " reactive floor");
        ck.slack(q - dn.dgs[g].q_max, at + " reactive ceiling");
        recomputed_obj += w * dt * dn.dgs[g].fuel_cost * p;
      }
    }
  }

  double scale = std::max(1.0, std::abs(sol.objective));
  if (std::abs(recomputed_obj - sol.objective) / scale > 1e-6)
    ck.rep.violations.push_back("objective mismatch: recomputed " +
                                std::to_string(recomputed_obj) + " vs reported " +
                                std::to_string(sol.objective));
  return ck.rep;
}

// ---- LP export ----

namespace {

void append_term(std::string& out, double coef, const std::string& name, bool first) {
  char buf[64];
  if (first)
    std::snprintf(buf, sizeof(buf), "%.17g ", coef);
  else if (coef >= 0)
    std::snprintf(buf, sizeof(buf), "+ %.17g ", coef);
  else
    std::snprintf(buf, sizeof(buf), "- %.17g ", -coef);
  out += buf;
  out += name;
  out += ' ';
}

}  // namespace

std::string model_to_lp(const MipModel& model) {
  const VarIndex& ix = model.index;
  std::string out = "Minimize\n obj: ";
  bool first = true;
  for (int c = 0; c < model.n_cols(); ++c) {
    if (model.obj[c] == 0.0) continue;
    append_term(out, model.obj[c], ix.col_name(c), first);
    first = false;
  }
  if (first) out += "0 " + ix.col_name(0);
  out += "\nSubject To\n";
  for (const Row& r : model.rows) {
    out += " " + r.name + ": ";
    for (size_t i = 0; i < r.cols.size(); ++i)
      append_term(out, r.coefs[i], ix.col_name(r.cols[i]), i == 0);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s %.17g\n", r.sense == 'E' ? "=" : "<=", r.rhs);
    out += buf;
  }
  out += "Bounds\n";
  for (int c = 0; c < model.n_cols(); ++c) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), " %.17g <= %s <= %.17g\n", model.lo[c],
                  ix.col_name(c).c_str(), model.hi[c]);
    out += buf;
  }
  out += "Binaries\n";
  for (int c = 0; c < model.n_cols(); ++c)
    if (model.is_binary[c]) out += " " + ix.col_name(c);
  out += "\nEnd\n";
  return out;
}

}  // namespace evjrs::mip
