#include "evjrs/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <tuple>

#include "evjrs/common.hpp"
#include "evjrs/simplex.hpp"

namespace evjrs::solver {

namespace {

constexpr double INF = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

simplex::LpConfig lp_config(const SolveConfig& cfg) {
  simplex::LpConfig c;
  c.feas_tol = cfg.feas_tol;
  return c;
}

struct Node {
  double bound = 0.0;
  long id = 0;
  std::vector<std::pair<int, int>> fixes;  // (binary column, value) along the path
  std::vector<double> x;                   // LP solution at this node
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    return std::tie(a.bound, a.id) > std::tie(b.bound, b.id);
  }
};

// Distance from the nearest integer, peaking at 0.5.
double fractionality(double v) { return 0.5 - std::abs(v - 0.5); }

}  // namespace

LpResult solve_lp(const mip::MipModel& model, const SolveConfig& cfg) {
  auto t0 = Clock::now();
  simplex::LpResult r = simplex::solve(simplex::relax(model), lp_config(cfg));
  LpResult out;
  out.status = r.status;
  out.objective = r.objective;
  out.values = std::move(r.x);
  out.iterations = r.iterations;
  out.wall_seconds = seconds_since(t0);
  return out;
}

MipResult solve_mip(const mip::MipModel& model, const SolveConfig& cfg) {
  auto t0 = Clock::now();
  simplex::LpModel lp = simplex::relax(model);
  simplex::LpConfig lpc = lp_config(cfg);

  std::vector<int> bins;
  for (int j = 0; j < model.n_cols(); ++j)
    if (model.is_binary[j]) bins.push_back(j);

  MipResult res;
  double inc_obj = INF;
  std::vector<double> inc_x;
  bool have_inc = false;

  // Solves with extra binary pins applied on top of the base bounds.
  auto with_fixes = [&](const std::vector<std::pair<int, int>>& fixes) {
    std::vector<std::pair<double, double>> saved(fixes.size());
    for (size_t i = 0; i < fixes.size(); ++i) {
      int j = fixes[i].first;
      saved[i] = {lp.lo[j], lp.hi[j]};
      lp.lo[j] = lp.hi[j] = fixes[i].second;
    }
    simplex::LpResult r = simplex::solve(lp, lpc);
    for (size_t i = 0; i < fixes.size(); ++i) {
      int j = fixes[i].first;
      lp.lo[j] = saved[i].first;
      lp.hi[j] = saved[i].second;
    }
    res.iterations += r.iterations;
    return r;
  };

  // Most fractional binary above `threshold` not pinned at this node;
  // ties fall to the lowest column ordinal. -1 when none qualifies.
  auto pick_branch = [&](const std::vector<double>& x,
                         const std::vector<std::pair<int, int>>& fixes, double threshold) {
    int best = -1;
    double best_frac = threshold;
    for (int j : bins) {
      if (lp.lo[j] == lp.hi[j]) continue;  // pre-fixed in the base model
      bool pinned = false;
      for (const auto& f : fixes) pinned = pinned || f.first == j;
      if (pinned) continue;
      double frac = fractionality(x[j]);
      if (frac > best_frac) {
        best_frac = frac;
        best = j;
      }
    }
    return best;
  };

  auto wrap = [&](mip::SolveStatus status) {
    res.status = status;
    if (have_inc) {
      res.objective = inc_obj;
      res.values = std::move(inc_x);
    } else {
      res.objective = INF;
    }
    res.wall_seconds = seconds_since(t0);
    return res;
  };

  simplex::LpResult root = simplex::solve(lp, lpc);
  res.iterations = root.iterations;
  if (root.status != mip::SolveStatus::optimal) {
    res.status = root.status;
    res.objective = INF;
    res.wall_seconds = seconds_since(t0);
    return res;
  }

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  open.push({root.objective, next_id++, {}, std::move(root.x)});

  std::ostream& log = cfg.log ? *cfg.log : std::cout;

  while (!open.empty()) {
    Node nd = open.top();
    open.pop();

    double gap_eps = cfg.rel_gap * std::max(1.0, std::abs(inc_obj));
    if (have_inc && nd.bound >= inc_obj - gap_eps) break;  // queue is bound-sorted
    if (cfg.node_limit > 0 && res.nodes >= cfg.node_limit)
      return wrap(mip::SolveStatus::node_limit);
    if (cfg.time_limit > 0.0 && seconds_since(t0) > cfg.time_limit)
      return wrap(mip::SolveStatus::time_limit);

    if (cfg.verbose) {
      log << "node " << nd.id << " bound " << nd.bound << " incumbent ";
      if (have_inc)
        log << inc_obj;
      else
        log << "-";
      log << " depth " << nd.fixes.size() << "\n";
    }

    int br = pick_branch(nd.x, nd.fixes, cfg.int_tol);
    if (br < 0) {
      // Integral within tolerance: pin every binary to its rounding and
      // re-solve so the incumbent is exactly integral and verifier-clean.
      std::vector<std::pair<int, int>> all;
      all.reserve(bins.size());
      for (int j : bins) all.push_back({j, nd.x[j] > 0.5 ? 1 : 0});
      simplex::LpResult pol = with_fixes(all);
      if (pol.status == mip::SolveStatus::optimal) {
        if (!have_inc || pol.objective < inc_obj) {
          inc_obj = pol.objective;
          inc_x = std::move(pol.x);
          for (int j : bins) inc_x[j] = nd.x[j] > 0.5 ? 1.0 : 0.0;
          have_inc = true;
        }
        continue;
      }
      if (pol.status == mip::SolveStatus::stall) return wrap(mip::SolveStatus::stall);
      // Rounding was infeasible: the near-integral values lied, so branch on
      // the least-settled free binary instead of accepting them.
      br = pick_branch(nd.x, nd.fixes, -1.0);
      if (br < 0) continue;  // every binary pinned: node LP already priced this
    }

    for (int v : {0, 1}) {
      auto fixes = nd.fixes;
      fixes.push_back({br, v});
      simplex::LpResult ch = with_fixes(fixes);
      ++res.nodes;
      if (ch.status == mip::SolveStatus::infeasible) continue;
      if (ch.status != mip::SolveStatus::optimal) return wrap(mip::SolveStatus::stall);
      double bound = std::max(ch.objective, nd.bound);  // child can only tighten
      double gap_eps2 = cfg.rel_gap * std::max(1.0, std::abs(inc_obj));
      if (have_inc && bound >= inc_obj - gap_eps2) continue;
      open.push({bound, next_id++, std::move(fixes), std::move(ch.x)});
    }
  }

  return wrap(have_inc ? mip::SolveStatus::optimal : mip::SolveStatus::infeasible);
}

std::vector<std::vector<int>> enumerate_routes(const netmodel::TimeSpaceNetwork& tsn,
                                               const std::vector<int>& congestion_flags,
                                               int start_node,
                                               const std::vector<std::pair<int, int>>& position_jobs,
                                               long cap) {
  if (static_cast<int>(congestion_flags.size()) != tsn.spans)
    throw Error(ErrorCategory::validation, "congestion flag count does not match span count");

  // Arcs usable at each span, grouped by origin.
  std::vector<std::map<int, std::vector<int>>> out_by_span(tsn.spans);
  for (int s = 0; s < tsn.spans; ++s)
    for (int id : tsn.enabled(s, congestion_flags[s] != 0))
      out_by_span[s][tsn.arcs[id].origin].push_back(id);

  std::vector<int> must(tsn.spans, -1);
  for (auto [span, node] : position_jobs) {
    if (span < 0 || span >= tsn.spans)
      throw Error(ErrorCategory::validation,
                  "position job span " + std::to_string(span) + " outside horizon");
    if (must[span] >= 0 && must[span] != node) return {};  // contradictory jobs
    must[span] = node;
  }

  std::vector<std::vector<int>> routes;
  std::vector<int> path(tsn.spans, -1);

  auto dfs = [&](auto&& self, int span, int pos) -> void {
    if (span == tsn.spans) {
      if (static_cast<long>(routes.size()) >= cap)
        throw Error(ErrorCategory::solve,
                    "route enumeration exceeded cap " + std::to_string(cap));
      routes.push_back(path);
      return;
    }
    if (must[span] >= 0 && must[span] != pos) return;
    auto it = out_by_span[span].find(pos);
    if (it == out_by_span[span].end()) return;
    for (int id : it->second) {
      path[span] = id;
      self(self, span + 1, tsn.arcs[id].destination);
    }
    path[span] = -1;
  };
  dfs(dfs, 0, start_node);
  return routes;
}

namespace {

// One admissible per-EV binary assignment: a route plus a charge/discharge
// pattern over its idle-at-charging-station slots.
struct EvChoice {
  int route = 0;
  uint64_t pattern = 0;  // bit i set: slot i discharges instead of charging
};

struct EvEnumeration {
  std::vector<std::vector<int>> routes;
  std::vector<std::vector<std::pair<int, int>>> slots;  // per route: (cs_idx, timestep)
  std::vector<EvChoice> choices;
};

}  // namespace

MipResult brute_force_solve(const instances::ProblemInstance& inst, const SolveConfig& cfg,
                            const mip::BuildOptions& opts) {
  auto t0 = Clock::now();
  const int n_ev = inst.fleet_size();
  const int n_sc = inst.scenarios.count();

  netmodel::TimeSpaceNetwork tsn =
      netmodel::build_tsn(inst.network.transport, inst.horizon);

  std::vector<int> cs_nodes;
  for (const auto& [node, bus] : inst.network.distribution.cs_bus_map) cs_nodes.push_back(node);
  std::sort(cs_nodes.begin(), cs_nodes.end());
  auto cs_index = [&](int node) {
    auto it = std::lower_bound(cs_nodes.begin(), cs_nodes.end(), node);
    return it != cs_nodes.end() && *it == node
               ? static_cast<int>(it - cs_nodes.begin())
               : -1;
  };

  // Per-EV enumeration of routes and licensing patterns. A licensed slot may
  // either charge or discharge; leaving it fully unused is dominated because
  // the charge license admits zero power.
  std::vector<EvEnumeration> evs(n_ev);
  for (int k = 0; k < n_ev; ++k) {
    std::vector<std::pair<int, int>> jobs;
    for (const auto& j : inst.schedule.jobs)
      if (j.ev == k) jobs.push_back({j.span, j.node});
    EvEnumeration& e = evs[k];
    e.routes = enumerate_routes(tsn, inst.congestion.flags, inst.fleet.evs[k].start_node, jobs,
                                cfg.ev_combo_cap);
    long combos = 0;
    for (size_t r = 0; r < e.routes.size(); ++r) {
      std::vector<std::pair<int, int>> slots;
      for (int t = 1; t < inst.horizon; ++t) {
        int arc = e.routes[r][t - 1];
        if (tsn.arcs[arc].kind != netmodel::ArcKind::idle) continue;
        int ci = cs_index(tsn.arcs[arc].origin);
        if (ci >= 0) slots.push_back({ci, t});
      }
      if (slots.size() > 62)
        throw Error(ErrorCategory::solve, "licensing pattern count overflows enumeration");
      long patterns = 1L << slots.size();
      if (combos > cfg.ev_combo_cap - patterns)
        throw Error(ErrorCategory::solve,
                    "EV " + std::to_string(k) + " route/pattern combinations exceed cap " +
                        std::to_string(cfg.ev_combo_cap));
      for (long p = 0; p < patterns; ++p)
        e.choices.push_back({static_cast<int>(r), static_cast<uint64_t>(p)});
      combos += patterns;
      e.slots.push_back(std::move(slots));
    }
    if (e.choices.empty()) {
      MipResult res;
      res.status = mip::SolveStatus::infeasible;
      res.wall_seconds = seconds_since(t0);
      return res;
    }
  }

  long joint = 1;
  for (const auto& e : evs) {
    long n = static_cast<long>(e.choices.size());
    if (joint > cfg.joint_combo_cap / n)
      throw Error(ErrorCategory::solve, "joint assignment count exceeds cap " +
                                            std::to_string(cfg.joint_combo_cap));
    joint *= n;
  }

  // Stochastic layout for assembling the final solution vector.
  mip::MipModel stochastic = mip::build_model(inst, false, 0, opts);
  MipResult res;
  res.values.assign(stochastic.n_cols(), 0.0);
  res.objective = 0.0;

  simplex::LpConfig lpc = lp_config(cfg);

  for (int sc = 0; sc < n_sc; ++sc) {
    mip::MipModel det = mip::build_model(inst, true, sc, opts);
    const mip::VarIndex& ix = det.index;
    simplex::LpModel lp = simplex::relax(det);

    double best_obj = INF;
    std::vector<double> best_x;

    std::vector<int> pick(n_ev, 0);
    bool done = false;
    while (!done) {
      for (int k = 0; k < n_ev; ++k) {
        const EvEnumeration& e = evs[k];
        const EvChoice& c = e.choices[pick[k]];
        for (int a = 0; a < ix.n_arcs; ++a) {
          int col = ix.routing(0, k, a);
          lp.lo[col] = lp.hi[col] = 0.0;
        }
        for (int arc : e.routes[c.route]) {
          int col = ix.routing(0, k, arc);
          lp.lo[col] = lp.hi[col] = 1.0;
        }
        for (int ci = 0; ci < ix.n_cs; ++ci)
          for (int t = 0; t < ix.horizon; ++t) {
            int cc = ix.charge_flag(0, k, ci, t);
            int dc = ix.discharge_flag(0, k, ci, t);
            lp.lo[cc] = lp.hi[cc] = 0.0;
            lp.lo[dc] = lp.hi[dc] = 0.0;
          }
        const auto& slots = e.slots[c.route];
        for (size_t i = 0; i < slots.size(); ++i) {
          auto [ci, t] = slots[i];
          bool discharge = (c.pattern >> i) & 1;
          int col = discharge ? ix.discharge_flag(0, k, ci, t) : ix.charge_flag(0, k, ci, t);
          lp.lo[col] = lp.hi[col] = 1.0;
        }
      }

      simplex::LpResult r = simplex::solve(lp, lpc);
      ++res.nodes;
      res.iterations += r.iterations;
      if (r.status == mip::SolveStatus::optimal && r.objective < best_obj) {
        best_obj = r.objective;
        best_x = std::move(r.x);
      }

      for (int k = n_ev - 1; k >= 0; --k) {
        if (++pick[k] < static_cast<int>(evs[k].choices.size())) break;
        pick[k] = 0;
        if (k == 0) done = true;
      }
    }

    if (best_x.empty()) {
      res.status = mip::SolveStatus::infeasible;
      res.values.clear();
      res.objective = 0.0;
      res.wall_seconds = seconds_since(t0);
      return res;
    }

    res.objective += inst.scenarios.probabilities[sc] * best_obj;
    int bin_block = ix.binary_count;  // one scenario's worth of binaries
    for (int j = 0; j < bin_block; ++j)
      res.values[static_cast<size_t>(sc) * bin_block + j] = best_x[j];
    for (int j = 0; j < ix.cont_per_sc; ++j)
      res.values[stochastic.index.binary_count + static_cast<size_t>(sc) * ix.cont_per_sc + j] =
          best_x[bin_block + j];
  }

  res.status = mip::SolveStatus::optimal;
  res.wall_seconds = seconds_since(t0);
  return res;
}

}  // namespace evjrs::solver
