#include <doctest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "evjrs/common.hpp"
#include "evjrs/mip.hpp"
#include "evjrs/netmodel.hpp"
#include "evjrs/solver.hpp"
#include "support/fixtures.hpp"

using namespace evjrs;
using namespace evjrs::mip;

namespace {

// Two-node network at horizon 6 (5 spans): one idle arc per node and span
// gives 10, each direction contributes a 1-span normal chain (5 placements)
// and a 2-span congested chain (2 hops x 4 placements), so 36 arcs total.
constexpr int kTinyArcs = 2 * 5 + 2 * (1 * 5 + 2 * 4);

}  // namespace

TEST_CASE("column registry sizes follow the network, horizon and scenarios") {
  auto inst = fixtures::tiny_instance(3, 2, 5);

  MipModel det = build_model(inst, true, 0);
  const VarIndex& ix = det.index;
  CHECK(ix.n_arcs == kTinyArcs);
  CHECK(ix.n_cs == 1);
  CHECK(ix.horizon == 6);
  CHECK(ix.n_per_ev == ix.n_arcs + 2 * ix.n_cs * ix.horizon);
  CHECK(ix.n_per_ev == kTinyArcs + 2 * 1 * 6);
  CHECK(ix.n_sc == 1);
  CHECK(ix.n_ev == 2);
  CHECK(ix.binary_count == 2 * ix.n_per_ev);
  CHECK(ix.total() == ix.binary_count + ix.cont_per_sc);
  CHECK(det.n_cols() == ix.total());
  CHECK(det.deterministic);
  CHECK(det.scenario == 0);

  MipModel sto = build_model(inst, false);
  CHECK(sto.index.n_sc == 5);
  CHECK(sto.index.n_per_ev == ix.n_per_ev);  // per-EV bits ignore fleet and scenarios
  CHECK(sto.index.binary_count == 5 * 2 * ix.n_per_ev);
  CHECK(sto.index.total() == sto.index.binary_count + 5 * ix.cont_per_sc);
  CHECK_FALSE(sto.deterministic);

  // Binaries occupy exactly the leading block, scenario-major then EV-major.
  for (int c = 0; c < sto.index.binary_count; ++c) CHECK(sto.is_binary[c] == 1);
  for (int c = sto.index.binary_count; c < sto.n_cols(); ++c) CHECK(sto.is_binary[c] == 0);
  CHECK(sto.index.routing(0, 0, 0) == 0);
  CHECK(sto.index.routing(1, 0, 0) == 2 * sto.index.n_per_ev);
}

TEST_CASE("every column name is unique") {
  auto inst = fixtures::tiny_instance(3, 2, 2);
  MipModel m = build_model(inst, false);
  std::set<std::string> names;
  for (int c = 0; c < m.n_cols(); ++c) names.insert(m.index.col_name(c));
  CHECK(static_cast<int>(names.size()) == m.n_cols());
}

TEST_CASE("an idle fleet with no export capacity does nothing") {
  auto inst = fixtures::idle_instance();
  inst.network.distribution.dgs[0].p_min = 0.0;  // the feeder cannot absorb power

  MipModel m = build_model(inst, true, 0);
  solver::MipResult res = solver::solve_mip(m);
  REQUIRE(res.status == SolveStatus::optimal);
  CHECK(std::abs(res.objective) <= 1e-7);

  const VarIndex& ix = m.index;
  for (int t = 0; t < 6; ++t) {
    CHECK(res.values[ix.ev_charge(0, 0, 0, t)] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(res.values[ix.ev_discharge(0, 0, 0, t)] == doctest::Approx(0.0).epsilon(1e-9));
  }

  Solution sol{res.status, res.objective, res.values};
  CHECK(verify_solution(inst, sol, true, 0).ok());
}

TEST_CASE("parked storage is exported exactly down to the energy floor") {
  // One EV sits at the charging station all day with nothing else on the
  // feeder. Every delivered kWh earns the discharge price and displaces fuel,
  // so the optimum drains e_init - e_min = 20 kWh of storage, which the
  // inefficiency factor turns into 20 / 1.05 kWh delivered:
  //   objective = -(0.07 + 0.12) * 20 / 1.05 = -76/21.
  auto inst = fixtures::idle_instance();
  double expect = -(0.07 + 0.12) * 20.0 / 1.05;

  MipModel m = build_model(inst, true, 0);
  solver::MipResult res = solver::solve_mip(m);
  REQUIRE(res.status == SolveStatus::optimal);
  CHECK(res.objective == doctest::Approx(expect).epsilon(1e-8));

  solver::MipResult oracle = solver::brute_force_solve(inst);
  REQUIRE(oracle.status == SolveStatus::optimal);
  CHECK(oracle.objective == doctest::Approx(expect).epsilon(1e-8));

  Solution sol{res.status, res.objective, res.values};
  CHECK(verify_solution(inst, sol, true, 0).ok());

  // Zero prices and a generation floor remove every incentive.
  auto flat = fixtures::idle_instance(0.0, 0.0);
  flat.network.distribution.dgs[0].p_min = 0.0;
  solver::MipResult none = solver::solve_mip(build_model(flat, true, 0));
  REQUIRE(none.status == SolveStatus::optimal);
  CHECK(std::abs(none.objective) <= 1e-7);
}

TEST_CASE("fixings pin bounds, conflict into infeasibility, or pin the optimum") {
  auto inst = fixtures::tiny_instance(11, 1);
  MipModel base = build_model(inst, true, 0);

  solver::MipResult free_run = solver::solve_mip(base);
  REQUIRE(free_run.status == SolveStatus::optimal);

  SUBCASE("an empty assignment changes nothing") {
    MipModel same = apply_fixings(base, {});
    solver::MipResult res = solver::solve_mip(same);
    REQUIRE(res.status == SolveStatus::optimal);
    CHECK(res.objective == doctest::Approx(free_run.objective).epsilon(1e-9));
  }

  SUBCASE("forbidding every departure from the start strands the EV") {
    netmodel::TimeSpaceNetwork tsn =
        netmodel::build_tsn(inst.network.transport, inst.horizon);
    PartialAssignment pa;
    int start = inst.fleet.evs[0].start_node;
    for (int id : tsn.arrivals_at_span(start, 0)) pa.fixes[base.index.routing(0, 0, id)] = 0;
    solver::MipResult res = solver::solve_mip(apply_fixings(base, pa));
    CHECK(res.status == SolveStatus::infeasible);
  }

  SUBCASE("pinning every binary to the optimum leaves an LP that attains it") {
    PartialAssignment pa;
    for (int c = 0; c < base.index.binary_count; ++c)
      pa.fixes[c] = static_cast<int>(std::llround(free_run.values[c]));
    solver::LpResult lp = solver::solve_lp(apply_fixings(base, pa));
    REQUIRE(lp.status == SolveStatus::optimal);
    CHECK(lp.objective == doctest::Approx(free_run.objective).epsilon(1e-8));
    for (int c = 0; c < base.index.binary_count; ++c)
      CHECK(std::abs(lp.values[c] - free_run.values[c]) <= 1e-7);
  }

  SUBCASE("only binary columns accept fixings") {
    PartialAssignment pa;
    pa.fixes[base.index.energy(0, 0, 2)] = 1;
    CHECK_THROWS_WITH_AS(apply_fixings(base, pa), doctest::Contains("non-binary"), Error);

    PartialAssignment bad_val;
    bad_val.fixes[0] = 2;
    CHECK_THROWS_AS(apply_fixings(base, bad_val), Error);

    PartialAssignment oob;
    oob.fixes[-1] = 0;
    CHECK_THROWS_AS(apply_fixings(base, oob), Error);
  }
}

TEST_CASE("the verifier accepts true optima and catches doctored values") {
  auto inst = fixtures::tiny_instance(21, 1);
  MipModel m = build_model(inst, true, 0);
  solver::MipResult res = solver::solve_mip(m);
  REQUIRE(res.status == SolveStatus::optimal);
  Solution sol{res.status, res.objective, res.values};
  const VarIndex& ix = m.index;

  SUBCASE("a clean optimum has no violations") {
    ViolationReport rep = verify_solution(inst, sol, true, 0);
    CHECK(rep.ok());
    CHECK(rep.max_residual <= 1e-7);
  }

  SUBCASE("a shifted state-of-charge breaks the energy recursion") {
    Solution bad = sol;
    bad.values[ix.energy(0, 0, 2)] += 1.0;
    ViolationReport rep = verify_solution(inst, bad, true, 0);
    CHECK_FALSE(rep.ok());
    bool found = false;
    for (const std::string& v : rep.violations)
      if (v.find("energy balance") != std::string::npos) found = true;
    CHECK(found);
    CHECK(rep.max_residual == doctest::Approx(1.0));
  }

  SUBCASE("a doctored voltage breaks the drop equations of adjacent lines") {
    Solution bad = sol;
    bad.values[ix.volt(0, 1, 3)] -= 0.01;  // bus 2 joins both feeder lines
    ViolationReport rep = verify_solution(inst, bad, true, 0);
    REQUIRE_FALSE(rep.ok());
    for (const std::string& v : rep.violations)
      CHECK(v.find("voltage drop") != std::string::npos);
    CHECK(rep.violations.size() == 2);
    CHECK(rep.max_residual == doctest::Approx(0.01));
  }

  SUBCASE("a misreported objective is flagged") {
    Solution bad = sol;
    bad.objective += 1.0;
    ViolationReport rep = verify_solution(inst, bad, true, 0);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.violations.front().find("objective mismatch") != std::string::npos);
  }

  SUBCASE("a column-count mismatch is an error, not a violation") {
    Solution bad = sol;
    bad.values.pop_back();
    CHECK_THROWS_AS(verify_solution(inst, bad, true, 0), Error);
  }
}

TEST_CASE("model assembly is deterministic") {
  auto inst = fixtures::tiny_instance(5, 2, 2);
  std::string a = model_to_lp(build_model(inst, false));
  std::string b = model_to_lp(build_model(inst, false));
  CHECK(a == b);
}

TEST_CASE("LP text export carries the model sections and column names") {
  auto inst = fixtures::idle_instance();
  MipModel m = build_model(inst, true, 0);
  std::string lp = model_to_lp(m);
  CHECK(lp.find("Minimize") != std::string::npos);
  CHECK(lp.find("Subject To") != std::string::npos);
  CHECK(lp.find("Bounds") != std::string::npos);
  CHECK(lp.find("Binaries") != std::string::npos);
  CHECK(lp.find("End") != std::string::npos);
  CHECK(lp.find(m.index.col_name(m.index.binary_count)) != std::string::npos);
}

TEST_CASE("assembly rejects malformed instances") {
  auto inst = fixtures::idle_instance();

  auto short_horizon = inst;
  short_horizon.horizon = 1;
  CHECK_THROWS_WITH_AS(build_model(short_horizon), doctest::Contains("horizon"), Error);

  auto late_job = inst;
  late_job.schedule.jobs.push_back({0, 2, 5});  // spans run 0..4 at horizon 6
  CHECK_THROWS_WITH_AS(build_model(late_job), doctest::Contains("outside"), Error);

  auto clash = inst;
  clash.schedule.jobs.push_back({0, 2, 0});  // the EV starts the day at node 1
  CHECK_THROWS_WITH_AS(build_model(clash), doctest::Contains("start position"), Error);

  CHECK_THROWS_WITH_AS(build_model(inst, true, 1), doctest::Contains("scenario"), Error);
  CHECK_THROWS_AS(build_model(inst, true, -1), Error);
}
