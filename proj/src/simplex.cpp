#include "evjrs/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evjrs/common.hpp"

namespace evjrs::simplex {

namespace {

constexpr double INF = std::numeric_limits<double>::infinity();

enum class VStat : uint8_t { at_lo, at_hi, basic };

// Dense LU with partial pivoting, row-permuted in place.
struct Lu {
  int m = 0;
  std::vector<double> a;  // column-major m x m, holds combined L\U
  std::vector<int> perm;  // row permutation: row i of PA = row perm[i] of A

  double& at(int r, int c) { return a[static_cast<size_t>(c) * m + r]; }
  double at(int r, int c) const { return a[static_cast<size_t>(c) * m + r]; }

  // Returns false (and the offending column) when a pivot collapses.
  bool factorize(int* bad_col) {
    perm.resize(m);
    for (int i = 0; i < m; ++i) perm[i] = i;
    for (int k = 0; k < m; ++k) {
      int piv = k;
      double best = std::abs(at(k, k));
      for (int r = k + 1; r < m; ++r) {
        double v = std::abs(at(r, k));
        if (v > best) {
          best = v;
          piv = r;
        }
      }
      if (best < 1e-12) {
        if (bad_col) *bad_col = k;
        return false;
      }
      if (piv != k) {
        std::swap(perm[k], perm[piv]);
        for (int c = 0; c < m; ++c) std::swap(at(k, c), at(piv, c));
      }
      double d = at(k, k);
      for (int r = k + 1; r < m; ++r) {
        double f = at(r, k) / d;
        at(r, k) = f;
        if (f == 0.0) continue;
        for (int c = k + 1; c < m; ++c) at(r, c) -= f * at(k, c);
      }
    }
    return true;
  }

  // x := B^-1 x
  void ftran(std::vector<double>& x, std::vector<double>& tmp) const {
    tmp.resize(m);
    for (int i = 0; i < m; ++i) tmp[i] = x[perm[i]];
    for (int k = 0; k < m; ++k) {
      double v = tmp[k];
      if (v == 0.0) continue;
      for (int r = k + 1; r < m; ++r) tmp[r] -= at(r, k) * v;
    }
    for (int k = m - 1; k >= 0; --k) {
      tmp[k] /= at(k, k);
      double v = tmp[k];
      if (v == 0.0) continue;
      for (int r = 0; r < k; ++r) tmp[r] -= at(r, k) * v;
    }
    x = tmp;
  }

  // x := B^-T x
  void btran(std::vector<double>& x, std::vector<double>& tmp) const {
    // Solve U^T y = x (forward), then L^T z = y (backward), then undo perm.
    for (int k = 0; k < m; ++k) {
      double v = x[k];
      for (int r = 0; r < k; ++r) v -= at(r, k) * x[r];
      x[k] = v / at(k, k);
    }
    for (int k = m - 1; k >= 0; --k) {
      double v = x[k];
      for (int r = k + 1; r < m; ++r) v -= at(r, k) * x[r];
      x[k] = v;
    }
    tmp.resize(m);
    for (int i = 0; i < m; ++i) tmp[perm[i]] = x[i];
    x = tmp;
  }
};

struct Eta {
  int pos;
  std::vector<double> y;  // pivot column at creation time
};

struct Engine {
  const LpModel& lp;
  const LpConfig& cfg;

  int m;           // rows
  int ns;          // structural columns
  int n_total;     // structural + slacks + artificials
  int slack_base;  // first slack index
  int art_base;    // first artificial index

  std::vector<std::vector<std::pair<int, double>>> cols;
  std::vector<double> lo, hi, cost, phase1_cost;
  std::vector<VStat> stat;
  std::vector<double> xval;
  std::vector<int> basis;  // position -> variable
  Lu lu;
  std::vector<Eta> etas;
  std::vector<double> work, work2;
  long iters = 0;
  bool bland = false;
  int degen_run = 0;

  explicit Engine(const LpModel& model, const LpConfig& config) : lp(model), cfg(config) {
    m = lp.n_rows;
    ns = lp.n_cols;
    int nl = 0;
    for (char s : lp.sense) nl += s == 'L' ? 1 : 0;
    slack_base = ns;
    art_base = ns + nl;
    n_total = ns + nl + m;

    cols.resize(n_total);
    for (int j = 0; j < ns; ++j) cols[j] = lp.cols[j];
    lo.assign(n_total, 0.0);
    hi.assign(n_total, 0.0);
    cost.assign(n_total, 0.0);
    for (int j = 0; j < ns; ++j) {
      lo[j] = lp.lo[j];
      hi[j] = lp.hi[j];
      cost[j] = lp.c[j];
      if (lo[j] == -INF && hi[j] == INF)
        throw Error(ErrorCategory::internal, "free columns are not supported");
    }
    int sl = slack_base;
    for (int i = 0; i < m; ++i) {
      if (lp.sense[i] == 'L') {
        cols[sl] = {{i, 1.0}};
        lo[sl] = 0.0;
        hi[sl] = INF;
        ++sl;
      }
    }
    for (int i = 0; i < m; ++i) {
      cols[art_base + i] = {{i, 1.0}};  // sign set at phase-1 init
      lo[art_base + i] = 0.0;
      hi[art_base + i] = 0.0;
    }
  }

  double bound_for_start(int j) const { return lo[j] > -INF ? lo[j] : hi[j]; }

  void ftran(std::vector<double>& v) {
    lu.ftran(v, work);
    for (const Eta& e : etas) {
      double piv = v[e.pos] / e.y[e.pos];
      if (piv != 0.0) {
        for (int i = 0; i < m; ++i) v[i] -= e.y[i] * piv;
        v[e.pos] = piv;
      } else {
        v[e.pos] = 0.0;
      }
    }
  }

  void btran(std::vector<double>& v) {
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      const Eta& e = *it;
      double s = v[e.pos];
      for (int i = 0; i < m; ++i)
        if (i != e.pos) s -= e.y[i] * v[i];
      v[e.pos] = s / e.y[e.pos];
    }
    lu.btran(v, work);
  }

  bool refactorize() {
    etas.clear();
    lu.m = m;
    lu.a.assign(static_cast<size_t>(m) * m, 0.0);
    for (int p = 0; p < m; ++p)
      for (auto [r, v] : cols[basis[p]]) lu.at(r, p) += v;
    return lu.factorize(nullptr);
  }

  void recompute_basics() {
    std::vector<double> r = lp.rhs;
    for (int j = 0; j < n_total; ++j) {
      if (stat[j] == VStat::basic || xval[j] == 0.0) continue;
      for (auto [row, v] : cols[j]) r[row] -= v * xval[j];
    }
    ftran(r);
    for (int p = 0; p < m; ++p) xval[basis[p]] = r[p];
  }

  // Largest bound/row violation over all columns and rows.
  double infeasibility() const {
    double worst = 0.0;
    for (int p = 0; p < m; ++p) {
      int j = basis[p];
      if (lo[j] > -INF) worst = std::max(worst, lo[j] - xval[j]);
      if (hi[j] < INF) worst = std::max(worst, xval[j] - hi[j]);
    }
    return worst;
  }

  // One simplex phase over the given cost vector. Returns status.
  mip::SolveStatus iterate(const std::vector<double>& cvec) {
    std::vector<double> pi(m), ycol(m);
    while (true) {
      if (++iters > cfg.max_iters) return mip::SolveStatus::stall;

      pi.assign(m, 0.0);
      for (int p = 0; p < m; ++p) pi[p] = cvec[basis[p]];
      btran(pi);

      int enter = -1;
      double best_merit = 0.0;
      for (int j = 0; j < n_total; ++j) {
        if (stat[j] == VStat::basic || lo[j] == hi[j]) continue;
        double d = cvec[j];
        for (auto [r, v] : cols[j]) d -= pi[r] * v;
        bool eligible = (stat[j] == VStat::at_lo && d < -cfg.dual_tol) ||
                        (stat[j] == VStat::at_hi && d > cfg.dual_tol);
        if (!eligible) continue;
        if (bland) {
          enter = j;
          break;
        }
        double merit = std::abs(d);
        if (merit > best_merit + 1e-15) {
          best_merit = merit;
          enter = j;
        }
      }
      if (enter < 0) return mip::SolveStatus::optimal;

      ycol.assign(m, 0.0);
      for (auto [r, v] : cols[enter]) ycol[r] = v;
      ftran(ycol);

      double dir = stat[enter] == VStat::at_lo ? 1.0 : -1.0;
      double theta = hi[enter] < INF && lo[enter] > -INF ? hi[enter] - lo[enter] : INF;
      int leave_pos = -1;
      double leave_rate = 0.0;
      for (int p = 0; p < m; ++p) {
        double rate = -dir * ycol[p];
        if (std::abs(rate) < cfg.pivot_tol) continue;
        int bvar = basis[p];
        double cap;
        if (rate > 0.0)
          cap = hi[bvar] < INF ? (hi[bvar] - xval[bvar]) / rate : INF;
        else
          cap = lo[bvar] > -INF ? (lo[bvar] - xval[bvar]) / rate : INF;
        if (cap == INF) continue;
        cap = std::max(0.0, cap);
        bool better;
        if (cap < theta - 1e-12) {
          better = true;
        } else if (cap < theta + 1e-12 && leave_pos >= 0) {
          better = bland ? basis[p] < basis[leave_pos]
                         : std::abs(ycol[p]) > std::abs(ycol[leave_pos]) + 1e-15;
        } else {
          better = false;
        }
        if (better) {
          theta = std::min(theta, cap);
          leave_pos = p;
          leave_rate = rate;
        }
      }

      if (theta == INF) return mip::SolveStatus::unbounded;

      if (theta <= 1e-11) {
        if (++degen_run > 500) bland = true;
      } else {
        degen_run = 0;
      }

      double delta = dir * theta;
      if (leave_pos < 0) {
        // Bound flip.
        for (int p = 0; p < m; ++p) xval[basis[p]] -= delta * ycol[p];
        xval[enter] = stat[enter] == VStat::at_lo ? hi[enter] : lo[enter];
        stat[enter] = stat[enter] == VStat::at_lo ? VStat::at_hi : VStat::at_lo;
        continue;
      }

      int leave_var = basis[leave_pos];
      for (int p = 0; p < m; ++p) xval[basis[p]] -= delta * ycol[p];
      xval[enter] += delta;
      xval[leave_var] = leave_rate > 0.0 ? hi[leave_var] : lo[leave_var];
      stat[leave_var] = leave_rate > 0.0 ? VStat::at_hi : VStat::at_lo;
      stat[enter] = VStat::basic;
      basis[leave_pos] = enter;
      etas.push_back({leave_pos, ycol});

      if (static_cast<int>(etas.size()) >= cfg.refactor_every) {
        if (!refactorize()) return mip::SolveStatus::stall;
        recompute_basics();
      }
    }
  }

  LpResult run() {
    stat.assign(n_total, VStat::at_lo);
    xval.assign(n_total, 0.0);
    for (int j = 0; j < art_base; ++j) {
      double v = bound_for_start(j);
      xval[j] = v;
      stat[j] = lo[j] > -INF ? VStat::at_lo : VStat::at_hi;
    }

    // Residuals decide the starting basis: slack if it fits, else artificial.
    std::vector<double> resid = lp.rhs;
    for (int j = 0; j < art_base; ++j) {
      if (xval[j] == 0.0) continue;
      for (auto [r, v] : cols[j]) resid[r] -= v * xval[j];
    }
    basis.assign(m, -1);
    std::vector<int> slack_of(m, -1);
    {
      int sl = slack_base;
      for (int i = 0; i < m; ++i)
        if (lp.sense[i] == 'L') slack_of[i] = sl++;
    }
    bool any_artificial = false;
    for (int i = 0; i < m; ++i) {
      if (slack_of[i] >= 0 && resid[i] >= 0.0) {
        basis[i] = slack_of[i];
        stat[slack_of[i]] = VStat::basic;
        xval[slack_of[i]] = resid[i];
      } else {
        int a = art_base + i;
        cols[a] = {{i, resid[i] >= 0.0 ? 1.0 : -1.0}};
        hi[a] = INF;
        basis[i] = a;
        stat[a] = VStat::basic;
        xval[a] = std::abs(resid[i]);
        any_artificial = true;
      }
    }
    if (!refactorize()) return {mip::SolveStatus::stall, 0.0, {}, iters};

    LpResult out;
    if (any_artificial) {
      phase1_cost.assign(n_total, 0.0);
      for (int i = 0; i < m; ++i)
        if (hi[art_base + i] == INF) phase1_cost[art_base + i] = 1.0;
      mip::SolveStatus st = iterate(phase1_cost);
      if (st == mip::SolveStatus::stall || st == mip::SolveStatus::unbounded) {
        out.status = mip::SolveStatus::stall;
        out.iterations = iters;
        return out;
      }
      double art_sum = 0.0;
      for (int i = 0; i < m; ++i) art_sum += std::abs(xval[art_base + i]);
      if (art_sum > cfg.feas_tol) {
        out.status = mip::SolveStatus::infeasible;
        out.iterations = iters;
        return out;
      }
      for (int i = 0; i < m; ++i) hi[art_base + i] = 0.0;  // pin
      bland = false;
      degen_run = 0;
    }

    mip::SolveStatus st = iterate(cost);
    if (st != mip::SolveStatus::optimal) {
      out.status = st == mip::SolveStatus::unbounded ? mip::SolveStatus::unbounded
                                                     : mip::SolveStatus::stall;
      out.iterations = iters;
      return out;
    }

    // Fresh factorization and values before reporting.
    if (!refactorize()) return {mip::SolveStatus::stall, 0.0, {}, iters};
    recompute_basics();
    if (infeasibility() > cfg.feas_tol * 10.0) {
      out.status = mip::SolveStatus::stall;
      out.iterations = iters;
      return out;
    }

    out.status = mip::SolveStatus::optimal;
    out.x.assign(ns, 0.0);
    double obj = 0.0;
    for (int j = 0; j < ns; ++j) {
      out.x[j] = xval[j];
      obj += cost[j] * xval[j];
    }
    out.objective = obj;
    out.iterations = iters;
    return out;
  }
};

}  // namespace

LpResult solve(const LpModel& lp, const LpConfig& cfg) {
  if (lp.n_rows == 0) {
    // Pure bound optimization.
    LpResult out;
    out.status = mip::SolveStatus::optimal;
    out.x.resize(lp.n_cols);
    double obj = 0.0;
    for (int j = 0; j < lp.n_cols; ++j) {
      if (lp.lo[j] > lp.hi[j]) return {mip::SolveStatus::infeasible, 0.0, {}, 0};
      double v = lp.c[j] > 0.0 ? lp.lo[j]
                               : (lp.c[j] < 0.0 ? lp.hi[j]
                                                : (lp.lo[j] > -INF ? lp.lo[j] : lp.hi[j]));
      if (v == -INF || v == INF) return {mip::SolveStatus::unbounded, 0.0, {}, 0};
      out.x[j] = v;
      obj += lp.c[j] * v;
    }
    out.objective = obj;
    return out;
  }
  for (int j = 0; j < lp.n_cols; ++j)
    if (lp.lo[j] > lp.hi[j]) return {mip::SolveStatus::infeasible, 0.0, {}, 0};
  Engine eng(lp, cfg);
  return eng.run();
}

LpModel relax(const mip::MipModel& m) {
  LpModel lp;
  lp.n_rows = static_cast<int>(m.rows.size());
  lp.n_cols = m.n_cols();
  lp.c = m.obj;
  lp.lo = m.lo;
  lp.hi = m.hi;
  lp.cols.resize(lp.n_cols);
  for (int r = 0; r < lp.n_rows; ++r) {
    const mip::Row& row = m.rows[r];
    lp.sense.push_back(row.sense);
    lp.rhs.push_back(row.rhs);
    for (size_t i = 0; i < row.cols.size(); ++i)
      lp.cols[row.cols[i]].push_back({r, row.coefs[i]});
  }
  // Merge duplicate entries within a column, keep deterministic order.
  for (auto& col : lp.cols) {
    std::sort(col.begin(), col.end());
    std::vector<std::pair<int, double>> merged;
    for (auto [r, v] : col) {
      if (!merged.empty() && merged.back().first == r)
        merged.back().second += v;
      else
        merged.push_back({r, v});
    }
    col = std::move(merged);
  }
  return lp;
}

}  // namespace evjrs::simplex
