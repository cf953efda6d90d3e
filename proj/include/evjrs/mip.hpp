#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "evjrs/instances.hpp"
#include "evjrs/netmodel.hpp"

namespace evjrs::mip {

// Column registry. Binary columns come first, scenario-major, then EV-major,
// then the per-EV bit order: routing bits by canonical arc order, charge
// flags by (CS ascending, timestep), discharge flags likewise. Continuous
// columns follow, also scenario-major. The per-EV bit count n_per_ev depends
// only on the network and horizon, never on fleet size.
struct VarIndex {
  int horizon = 0;
  int spans = 0;
  int n_arcs = 0;
  int n_cs = 0;
  int n_ev = 0;
  int n_sc = 0;
  int n_dg = 0;
  int n_line = 0;
  int n_bus = 0;
  std::vector<int> cs_nodes;  // sorted

  int n_per_ev = 0;
  int binary_count = 0;
  int cont_per_sc = 0;

  // binaries
  int routing(int sc, int k, int arc) const;
  int charge_flag(int sc, int k, int cs_idx, int t) const;
  int discharge_flag(int sc, int k, int cs_idx, int t) const;

  // continuous
  int dg_p(int sc, int g, int t) const;
  int dg_q(int sc, int g, int t) const;
  int ev_charge(int sc, int k, int cs_idx, int t) const;
  int ev_discharge(int sc, int k, int cs_idx, int t) const;
  int ev_move(int sc, int k, int t) const;
  int energy(int sc, int k, int t) const;
  int line_p(int sc, int l, int t) const;
  int line_q(int sc, int l, int t) const;
  int volt(int sc, int b_idx, int t) const;

  int total() const;
  std::string col_name(int col) const;
};

VarIndex make_var_index(const netmodel::TimeSpaceNetwork& tsn, const netmodel::Network& net,
                        int n_ev, int n_sc);

struct Row {
  std::vector<int> cols;
  std::vector<double> coefs;
  char sense = 'E';  // 'E' =, 'L' <=
  double rhs = 0.0;
  std::string name;
};

struct MipModel {
  VarIndex index;
  std::vector<double> obj;
  std::vector<double> lo, hi;
  std::vector<uint8_t> is_binary;
  std::vector<Row> rows;

  bool deterministic = false;
  int scenario = -1;  // source scenario in deterministic mode

  int n_cols() const { return static_cast<int>(obj.size()); }
};

enum class SolveStatus { optimal, infeasible, unbounded, node_limit, time_limit, stall };
const char* status_name(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::infeasible;
  double objective = 0.0;
  std::vector<double> values;
};

struct PartialAssignment {
  std::map<int, int> fixes;  // binary column -> 0/1
};

struct BuildOptions {
  bool terminal_energy = false;  // require E at the last timestep >= E_init
};

// Assembles the full day-ahead model: routing over the time-space network,
// charge/discharge licensing, EV energy balance, and linearized radial power
// flow, replicated per scenario with probability-weighted costs. Deterministic
// mode keeps a single scenario at weight 1.
MipModel build_model(const instances::ProblemInstance& inst, bool deterministic = false,
                     int scenario = 0, const BuildOptions& opts = {});

// Returns a copy with the assigned binary bounds clamped; throws on
// non-binary columns.
MipModel apply_fixings(const MipModel& model, const PartialAssignment& pa);

struct ViolationReport {
  std::vector<std::string> violations;
  double max_residual = 0.0;
  bool ok() const { return violations.empty(); }
};

// Independent re-check of every constraint family straight from instance
// data (never from the assembled rows); residuals above `tol` are reported.
ViolationReport verify_solution(const instances::ProblemInstance& inst, const Solution& sol,
                                bool deterministic = false, int scenario = 0,
                                const BuildOptions& opts = {}, double tol = 1e-6);

// CPLEX-LP-style text export with VarIndex column names, for cross-checking
// against external solvers.
std::string model_to_lp(const MipModel& model);

}  // namespace evjrs::mip
