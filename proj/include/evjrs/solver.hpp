#pragma once

#include <ostream>
#include <utility>
#include <vector>

#include "evjrs/instances.hpp"
#include "evjrs/mip.hpp"
#include "evjrs/netmodel.hpp"

namespace evjrs::solver {

struct SolveConfig {
  double feas_tol = 1e-7;  // LP feasibility tolerance
  double int_tol = 1e-6;   // binary integrality tolerance
  double rel_gap = 1e-6;   // relative MIP gap: (incumbent - bound) / max(1, |incumbent|)
  long node_limit = 0;     // branch-and-bound nodes; 0 disables
  double time_limit = 0.0;  // wall seconds; 0 disables
  int workers = 1;  // accepted for interface symmetry; node exploration is serial
  bool verbose = false;
  std::ostream* log = nullptr;  // node log sink; std::cout when null and verbose

  long ev_combo_cap = 4096;       // oracle: per-EV route x charge-pattern cap
  long joint_combo_cap = 200000;  // oracle: whole-fleet assignment cap
};

struct MipResult {
  mip::SolveStatus status = mip::SolveStatus::infeasible;
  double objective = 0.0;  // incumbent objective; +inf when a limit hit first
  std::vector<double> values;
  long nodes = 0;       // tree nodes beyond the root (0: root already integral)
  long iterations = 0;  // simplex iterations across every LP solved
  double wall_seconds = 0.0;
};

using LpResult = MipResult;

// Solves the continuous relaxation: binaries loosened to their [lo, hi] box,
// which keeps any fixings applied beforehand.
LpResult solve_lp(const mip::MipModel& model, const SolveConfig& cfg = {});

// Best-bound branch and bound over the binary columns. Branches on the most
// fractional free binary, ties to the lowest column ordinal; incumbents are
// re-solved with every binary pinned to its rounded value so the reported
// solution is exactly integral. Hitting a node or time limit returns the best
// incumbent found under the matching status.
MipResult solve_mip(const mip::MipModel& model, const SolveConfig& cfg = {});

// Exhaustive oracle: per EV, depth-first enumeration of every admissible
// time-space route, then every charge/discharge licensing pattern on it; each
// combined binary assignment is priced by one continuous LP per scenario.
// Exceeding an enumeration cap raises a solve error rather than approximating.
MipResult brute_force_solve(const instances::ProblemInstance& inst, const SolveConfig& cfg = {},
                            const mip::BuildOptions& opts = {});

// One arc id per span, in span order. `position_jobs` holds (span, node)
// requirements: the route must depart `node` during `span`. Routes beyond
// `cap` raise a solve error. Exposed for the oracle and its tests.
std::vector<std::vector<int>> enumerate_routes(const netmodel::TimeSpaceNetwork& tsn,
                                               const std::vector<int>& congestion_flags,
                                               int start_node,
                                               const std::vector<std::pair<int, int>>& position_jobs,
                                               long cap);

}  // namespace evjrs::solver
