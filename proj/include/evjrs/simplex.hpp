#pragma once

#include <vector>

#include "evjrs/mip.hpp"

namespace evjrs::simplex {

// Standard-form input: min c'x subject to row senses 'E' (=) or 'L' (<=)
// and box bounds on every structural column. Upper bounds may be +inf.
struct LpModel {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<double> c;
  std::vector<double> lo, hi;
  std::vector<std::vector<std::pair<int, double>>> cols;  // per column: (row, coef)
  std::vector<char> sense;
  std::vector<double> rhs;
};

struct LpConfig {
  double feas_tol = 1e-7;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-8;
  long max_iters = 200000;
  int refactor_every = 64;
};

struct LpResult {
  mip::SolveStatus status = mip::SolveStatus::infeasible;
  double objective = 0.0;
  std::vector<double> x;  // structural column values
  long iterations = 0;
};

// Bounded-variable primal simplex: artificial-column phase 1, Dantzig pricing
// with a Bland fallback when degeneracy stalls, dense LU basis with
// product-form updates and periodic refactorization.
LpResult solve(const LpModel& lp, const LpConfig& cfg = {});

// Relaxes the integer model: binaries become [lo, hi] continuous columns.
LpModel relax(const mip::MipModel& m);

}  // namespace evjrs::simplex
