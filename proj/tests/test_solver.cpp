#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "evjrs/common.hpp"
#include "evjrs/mip.hpp"
#include "evjrs/netmodel.hpp"
#include "evjrs/solver.hpp"
#include "support/fixtures.hpp"

using namespace evjrs;
using namespace evjrs::solver;

namespace {

netmodel::TimeSpaceNetwork tiny_tsn() {
  return netmodel::build_tsn(fixtures::tiny_network().transport, 6);
}

}  // namespace

TEST_CASE("route enumeration matches hand-counted automata") {
  netmodel::TimeSpaceNetwork tsn = tiny_tsn();

  SUBCASE("a clear day offers two choices per span") {
    std::vector<int> clear(5, 0);
    auto routes = enumerate_routes(tsn, clear, 1, {}, 100000);
    CHECK(routes.size() == 32);  // 2^5: idle or hop, every span

    // Every route is a connected arc-per-span chain out of the start.
    for (const auto& r : routes) {
      REQUIRE(r.size() == 5);
      CHECK(tsn.arcs[r[0]].origin == 1);
      for (int s = 0; s < 5; ++s) {
        CHECK(tsn.arcs[r[s]].span == s);
        if (s > 0) CHECK(tsn.arcs[r[s]].origin == tsn.arcs[r[s - 1]].destination);
      }
    }
  }

  SUBCASE("a fully jammed day counts like a Fibonacci ladder") {
    // Under congestion each span offers idle (1 span) or the two-span chain,
    // so the count obeys f(s) = f(s+1) + f(s+2): 1,1,2,3,5,8 over 5 spans.
    std::vector<int> jam(5, 1);
    CHECK(enumerate_routes(tsn, jam, 1, {}, 100000).size() == 8);
  }

  SUBCASE("one jammed span mixes the two counts") {
    // Spans 0,2,3,4 branch twice; the jam at span 1 gives f(1) = f(2) + f(3)
    // with f(2) = 8, f(3) = 4: total 2 * 12 = 24.
    std::vector<int> flags = {0, 1, 0, 0, 0};
    CHECK(enumerate_routes(tsn, flags, 1, {}, 100000).size() == 24);
  }

  SUBCASE("position requirements prune to exactly the compliant routes") {
    // Departing node 1 at spans 0..4 forces idling through span 3; the last
    // span may still idle or hop since both leave from node 1.
    std::vector<int> clear(5, 0);
    std::vector<std::pair<int, int>> park_all = {{0, 1}, {1, 1}, {2, 1}, {3, 1}, {4, 1}};
    auto parked = enumerate_routes(tsn, clear, 1, park_all, 100000);
    REQUIRE(parked.size() == 2);
    for (const auto& r : parked)
      for (int s = 0; s < 4; ++s) CHECK(tsn.arcs[r[s]].kind == netmodel::ArcKind::idle);

    // Departing node 2 at span 1 forces the hop at span 0, frees the rest.
    auto visit = enumerate_routes(tsn, clear, 1, {{1, 2}}, 100000);
    CHECK(visit.size() == 16);

    // Being at node 2 at span 0 contradicts the start position.
    CHECK(enumerate_routes(tsn, clear, 1, {{0, 2}}, 100000).empty());
  }

  SUBCASE("the cap is a hard error, not a truncation") {
    std::vector<int> clear(5, 0);
    CHECK_THROWS_WITH_AS(enumerate_routes(tsn, clear, 1, {}, 5), doctest::Contains("cap"),
                         Error);
  }
}

TEST_CASE("branch and bound agrees with exhaustive enumeration") {
  for (uint64_t seed : {1, 2, 3, 4, 5}) {
    auto inst = fixtures::tiny_instance(seed, 1);
    MipResult bb = solve_mip(mip::build_model(inst, true, 0));
    MipResult oracle = brute_force_solve(inst);
    REQUIRE(bb.status == mip::SolveStatus::optimal);
    REQUIRE(oracle.status == mip::SolveStatus::optimal);
    CHECK(bb.objective ==
          doctest::Approx(oracle.objective).epsilon(1e-6).scale(std::max(1.0, oracle.objective)));
  }
  for (uint64_t seed : {2, 4}) {
    auto inst = fixtures::tiny_instance(seed, 2);
    MipResult bb = solve_mip(mip::build_model(inst, true, 0));
    MipResult oracle = brute_force_solve(inst);
    REQUIRE(bb.status == mip::SolveStatus::optimal);
    REQUIRE(oracle.status == mip::SolveStatus::optimal);
    CHECK(bb.objective ==
          doctest::Approx(oracle.objective).epsilon(1e-6).scale(std::max(1.0, oracle.objective)));
  }
}

TEST_CASE("the relaxation never exceeds the integer optimum") {
  for (uint64_t seed : {1, 3, 5, 7}) {
    auto inst = fixtures::tiny_instance(seed, 1);
    mip::MipModel m = mip::build_model(inst, true, 0);
    LpResult lp = solve_lp(m);
    MipResult mip_res = solve_mip(m);
    REQUIRE(lp.status == mip::SolveStatus::optimal);
    REQUIRE(mip_res.status == mip::SolveStatus::optimal);
    CHECK(lp.objective <= mip_res.objective + 1e-6 * std::max(1.0, std::abs(mip_res.objective)));
  }
}

TEST_CASE("correct fixings keep the optimum and shrink the tree") {
  for (uint64_t seed : {1, 7, 11}) {
    auto inst = fixtures::tiny_instance(seed, 2);
    mip::MipModel m = mip::build_model(inst, true, 0);
    MipResult free_run = solve_mip(m);
    REQUIRE(free_run.status == mip::SolveStatus::optimal);

    // Pin every other binary to its optimal value.
    mip::PartialAssignment pa;
    for (int c = 0; c < m.index.binary_count; c += 2)
      pa.fixes[c] = free_run.values[c] > 0.5 ? 1 : 0;
    MipResult pinned = solve_mip(mip::apply_fixings(m, pa));
    REQUIRE(pinned.status == mip::SolveStatus::optimal);
    CHECK(pinned.objective == doctest::Approx(free_run.objective)
                                  .epsilon(1e-6)
                                  .scale(std::max(1.0, free_run.objective)));
    CHECK(pinned.nodes <= free_run.nodes);
  }
}

TEST_CASE("a fully pinned model solves at the root") {
  auto inst = fixtures::tiny_instance(4, 1);
  mip::MipModel m = mip::build_model(inst, true, 0);
  MipResult free_run = solve_mip(m);
  REQUIRE(free_run.status == mip::SolveStatus::optimal);

  mip::PartialAssignment pa;
  for (int c = 0; c < m.index.binary_count; ++c)
    pa.fixes[c] = free_run.values[c] > 0.5 ? 1 : 0;
  MipResult pinned = solve_mip(mip::apply_fixings(m, pa));
  REQUIRE(pinned.status == mip::SolveStatus::optimal);
  CHECK(pinned.nodes == 0);
  CHECK(pinned.objective == doctest::Approx(free_run.objective).epsilon(1e-8));
}

TEST_CASE("node and time limits cut the search off honestly") {
  auto inst = fixtures::tiny_instance(1, 1);  // needs ~10 nodes when free
  mip::MipModel m = mip::build_model(inst, true, 0);

  SolveConfig capped;
  capped.node_limit = 2;
  MipResult res = solve_mip(m, capped);
  CHECK(res.status == mip::SolveStatus::node_limit);
  CHECK(res.nodes <= 2);

  SolveConfig rushed;
  rushed.time_limit = 1e-9;
  CHECK(solve_mip(m, rushed).status == mip::SolveStatus::time_limit);
}

TEST_CASE("repeat solves are reproducible to the bit") {
  auto inst = fixtures::tiny_instance(6, 2);
  mip::MipModel m = mip::build_model(inst, true, 0);
  MipResult a = solve_mip(m);
  MipResult b = solve_mip(m);
  CHECK(a.status == b.status);
  CHECK(a.objective == b.objective);
  CHECK(a.nodes == b.nodes);
  CHECK(a.iterations == b.iterations);
  CHECK(a.values == b.values);
}

TEST_CASE("the verbose log walks a non-decreasing best bound") {
  auto inst = fixtures::tiny_instance(1, 1);
  mip::MipModel m = mip::build_model(inst, true, 0);

  std::ostringstream log;
  SolveConfig cfg;
  cfg.verbose = true;
  cfg.log = &log;
  MipResult res = solve_mip(m, cfg);
  REQUIRE(res.status == mip::SolveStatus::optimal);

  std::istringstream lines(log.str());
  std::string word;
  std::vector<double> bounds;
  while (lines >> word) {
    if (word != "bound") continue;
    double b;
    lines >> b;
    bounds.push_back(b);
  }
  REQUIRE(bounds.size() >= 2);  // this instance needs a real tree
  for (size_t i = 1; i < bounds.size(); ++i)
    CHECK(bounds[i] >= bounds[i - 1] - 1e-4 * std::max(1.0, std::abs(bounds[i - 1])));
  CHECK(bounds.back() <= res.objective + 1e-6 * std::max(1.0, std::abs(res.objective)));
}

TEST_CASE("enumeration caps turn oversized oracles into errors") {
  auto inst = fixtures::tiny_instance(2, 1);

  SolveConfig tight;
  tight.ev_combo_cap = 1;
  CHECK_THROWS_AS(brute_force_solve(inst, tight), Error);

  auto two = fixtures::tiny_instance(2, 2);
  SolveConfig joint;
  joint.joint_combo_cap = 1;
  CHECK_THROWS_AS(brute_force_solve(two, joint), Error);
}
