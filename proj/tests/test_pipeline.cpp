#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evjrs/common.hpp"
#include "evjrs/hashutil.hpp"
#include "evjrs/instances.hpp"
#include "evjrs/learner.hpp"
#include "evjrs/mip.hpp"
#include "evjrs/pipeline.hpp"
#include "evjrs/solver.hpp"
#include "support/fixtures.hpp"

using namespace evjrs;
using namespace evjrs::pipeline;

namespace {

instances::NormStats unit_stats() {
  instances::NormStats st;
  st.valid = true;
  for (int t = 0; t < 4; ++t) {
    st.lo[t] = 0.0;
    st.hi[t] = 1.0;
  }
  return st;
}

// Zero network except for the output bias: bit j of every EV predicts
// sigmoid(bias[j]), pinned hard to the given bit string when biased by +-5.
learner::TransformerParams bit_oracle(const std::vector<uint8_t>& bits, int horizon) {
  learner::ModelConfig mc;
  mc.d_model = 8;
  mc.heads = 2;
  mc.cls_hidden1 = 8;
  mc.cls_hidden2 = 8;
  mc.horizon = horizon;
  mc.n_per_ev = static_cast<int>(bits.size());
  learner::TransformerParams p = learner::zeros_like(learner::init_params(mc, 1));
  for (size_t j = 0; j < bits.size(); ++j) p.cls_b3[j] = bits[j] ? 5.0 : -5.0;
  return p;
}

}  // namespace

TEST_CASE("per-EV bit width is consistent across the registry helpers") {
  auto net = fixtures::tiny_network();
  int npe = n_per_ev_for(net, 6);
  auto tsn = netmodel::build_tsn(net.transport, 6);
  CHECK(npe == mip::make_var_index(tsn, net, 3, 2).n_per_ev);
  CHECK(npe == 48);  // 36 arcs + 2 license families * 1 station * 6 timesteps
}

TEST_CASE("labeling solves, stores bits and leaves the content hash stable") {
  fixtures::TempDir tmp("label");
  auto net = fixtures::tiny_network();
  auto cfg = fixtures::tiny_gen();
  instances::generate_dataset(tmp.path(), net, cfg, 5, 4, {1, 2});

  solver::SolveConfig scfg;
  std::ostringstream log;
  auto samples = label_dataset(tmp.path(), scfg, &log);
  REQUIRE(samples.size() == 4);

  int npe = n_per_ev_for(net, 6);
  auto manifest = instances::read_manifest(tmp.path());
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto& entry = manifest.entries[i];
    CHECK_FALSE(entry.label_file.empty());
    CHECK(std::filesystem::exists(tmp.sub(entry.label_file)));
    CHECK(entry.objective > 0.0);
    CHECK(samples[i].labels.size() == static_cast<size_t>(entry.fleet_size) * npe);
    for (uint8_t b : samples[i].labels) CHECK((b == 0 || b == 1));
    CHECK(samples[i].instance_hash == entry.instance_hash);
  }

  // The stored bits are exactly the deterministic optimum of the instance.
  {
    auto inst = instances::read_instance(tmp.sub(manifest.entries[0].instance_file));
    auto res = solver::solve_mip(mip::build_model(inst, true, 0), scfg);
    REQUIRE(res.status == mip::SolveStatus::optimal);
    for (size_t j = 0; j < samples[0].labels.size(); ++j)
      CHECK(samples[0].labels[j] == (res.values[j] > 0.5 ? 1 : 0));
    CHECK(res.objective == doctest::Approx(manifest.entries[0].objective).epsilon(1e-12));
  }

  // Relabeling recomputes identical payloads: the content hash cannot move.
  std::string h1 = instances::dataset_content_hash(tmp.path());
  label_dataset(tmp.path(), scfg);
  CHECK(instances::dataset_content_hash(tmp.path()) == h1);

  // Reading back returns the same bits and objectives.
  auto loaded = load_labeled(tmp.path());
  REQUIRE(loaded.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(loaded[i].labels == samples[i].labels);
    CHECK(loaded[i].features.tokens == samples[i].features.tokens);
    CHECK(loaded[i].objective == doctest::Approx(samples[i].objective).epsilon(1e-12));
  }
}

TEST_CASE("labeling errors are honest") {
  fixtures::TempDir tmp("label-err");
  auto net = fixtures::tiny_network();
  auto cfg = fixtures::tiny_gen();
  instances::generate_dataset(tmp.path(), net, cfg, 6, 2, {1});

  CHECK_THROWS_WITH_AS(load_labeled(tmp.path()), doctest::Contains("no labeled entries"), Error);

  solver::SolveConfig hobbled;
  hobbled.time_limit = 1e-12;  // every solve hits the limit, nothing labels
  std::ostringstream log;
  CHECK_THROWS_AS(label_dataset(tmp.path(), hobbled, &log), Error);
  CHECK(log.str().find("skipping entry") != std::string::npos);
}

TEST_CASE("vacuous thresholds prune nothing and reproduce the plain solve") {
  auto inst = fixtures::tiny_instance(3, 1);
  learner::TransformerParams p = bit_oracle(std::vector<uint8_t>(48, 0), 6);
  solver::SolveConfig scfg;

  PruneOutcome out = prune_and_solve(inst, p, learner::Thresholds{}, unit_stats(), scfg);
  CHECK(out.fixed_bits == 0);
  CHECK(out.dl_feasible);
  REQUIRE(out.solution.status == mip::SolveStatus::optimal);

  solver::MipResult plain = solver::solve_mip(mip::build_model(inst, false, 0), scfg);
  CHECK(out.solution.objective == plain.objective);
  CHECK(out.solution.values == plain.values);
  CHECK(out.nodes == plain.nodes);
}

TEST_CASE("fixing the true optimum keeps it and shrinks or holds the tree") {
  for (uint64_t seed : {4, 6}) {
    auto inst = fixtures::tiny_instance(seed, 1);
    solver::SolveConfig scfg;
    auto det = solver::solve_mip(mip::build_model(inst, true, 0), scfg);
    REQUIRE(det.status == mip::SolveStatus::optimal);
    std::vector<uint8_t> y(48);
    for (int j = 0; j < 48; ++j) y[j] = det.values[j] > 0.5 ? 1 : 0;

    PruneOutcome out =
        prune_and_solve(inst, bit_oracle(y, 6), {0.5, 0.5}, unit_stats(), scfg);
    CHECK(out.fixed_bits == 48);
    CHECK(out.dl_feasible);
    REQUIRE(out.solution.status == mip::SolveStatus::optimal);

    solver::MipResult plain = solver::solve_mip(mip::build_model(inst, false, 0), scfg);
    CHECK(out.solution.objective ==
          doctest::Approx(plain.objective).epsilon(1e-6).scale(std::max(1.0, plain.objective)));
    CHECK(out.nodes <= plain.nodes);
    CHECK(mip::verify_solution(inst, out.solution, false, 0).ok());
  }
}

TEST_CASE("hopeless fixings fall back to the exact solver") {
  auto inst = fixtures::tiny_instance(5, 1);
  // Predicting 1 for every bit contradicts the one-arc-per-span rule.
  learner::TransformerParams p = bit_oracle(std::vector<uint8_t>(48, 1), 6);
  solver::SolveConfig scfg;

  PruneOutcome out = prune_and_solve(inst, p, {0.5, 0.5}, unit_stats(), scfg);
  CHECK(out.fixed_bits == 48);
  CHECK_FALSE(out.dl_feasible);
  CHECK(out.fallback_seconds > 0.0);
  REQUIRE(out.solution.status == mip::SolveStatus::optimal);
  CHECK(out.assisted_seconds >=
        out.inference_seconds + out.pruned_seconds + out.fallback_seconds - 1e-12);

  solver::MipResult plain = solver::solve_mip(mip::build_model(inst, false, 0), scfg);
  CHECK(out.solution.objective == plain.objective);
  CHECK(mip::verify_solution(inst, out.solution, false, 0).ok());
}

TEST_CASE("disabling the model collapses the comparison to exact zeros") {
  std::vector<instances::ProblemInstance> tests = {fixtures::tiny_instance(7, 1),
                                                   fixtures::tiny_instance(8, 1)};
  learner::TransformerParams p = bit_oracle(std::vector<uint8_t>(48, 0), 6);
  solver::SolveConfig scfg;

  EvalMetrics m = evaluate(tests, p, learner::Thresholds{}, unit_stats(), scfg, nullptr, {},
                           /*use_model=*/false);
  CHECK(m.n == 2);
  CHECK(m.n_dl == 2);
  CHECK(m.r_bar == 0.0);
  CHECK(m.l_bar == 0.0);
  CHECK(m.feas == 100.0);
  for (const SampleRecord& r : m.samples) {
    CHECK(r.t_assist == r.t_plain);
    CHECK(r.v_assist == r.v_plain);
    CHECK(r.dl_feasible);
  }
}

TEST_CASE("a perfect bit oracle aces accuracy without objective regression") {
  auto inst = fixtures::tiny_instance(2, 1);
  solver::SolveConfig scfg;
  auto det = solver::solve_mip(mip::build_model(inst, true, 0), scfg);
  REQUIRE(det.status == mip::SolveStatus::optimal);
  std::vector<uint8_t> y(48);
  int ones = 0;
  for (int j = 0; j < 48; ++j) {
    y[j] = det.values[j] > 0.5 ? 1 : 0;
    ones += y[j];
  }
  REQUIRE(ones > 0);
  REQUIRE(ones < 48);  // both classes must appear for the accuracy split

  std::vector<instances::ProblemInstance> tests = {inst, inst};
  EvalMetrics m =
      evaluate(tests, bit_oracle(y, 6), {0.5, 0.5}, unit_stats(), scfg);
  CHECK(m.acc0 == 100.0);
  CHECK(m.acc1 == 100.0);
  CHECK(m.feas == 100.0);
  CHECK(m.n == 2);
  CHECK(std::abs(m.l_bar) <= 1e-4);
}

TEST_CASE("the metrics table prints a header, the metrics and every sample") {
  EvalMetrics m;
  m.acc0 = 95.5;
  m.acc1 = 90.25;
  m.r_bar = 12.5;
  m.l_bar = 0.125;
  m.feas = 100;
  m.n = 2;
  m.n_dl = 2;
  m.samples.push_back({0, 1.5, 2.0, 10.0, 10.0, true});
  m.samples.push_back({1, 0.5, 1.0, 12.5, 12.0, false});

  std::string csv = metrics_csv(m);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "ACC_0,ACC_1,r_bar,l_bar,feas");
  std::getline(is, line);
  CHECK(line == "95.5,90.25,12.5,0.125,100");
  std::getline(is, line);
  CHECK(line == "sample,t_assist,t_plain,v_assist,v_plain,dl_feasible");
  std::getline(is, line);
  CHECK(line == "0,1.5,2,10,10,1");
  std::getline(is, line);
  CHECK(line == "1,0.5,1,12.5,12,0");
}

TEST_CASE("training grids step from the low count and stay in range") {
  CHECK(training_grid(20, 100, 15) == std::vector<int>{20, 35, 50, 65, 80, 95});
  CHECK(training_grid(2, 4, 2) == std::vector<int>{2, 4});
  CHECK(training_grid(2, 4, 3) == std::vector<int>{2});
  CHECK(training_grid(3, 3, 1) == std::vector<int>{3});
  CHECK(training_grid(20, 100, 5).size() == 17);
}

TEST_CASE("experiment validation separates training from test counts") {
  ExperimentConfig cfg;
  cfg.out_dir = "somewhere";
  cfg.count_lo = 20;
  cfg.count_hi = 100;
  cfg.multipliers = {5, 10, 15, 20};

  SUBCASE("defaults take every count no grid covers") {
    std::vector<int> tests = validate_experiment_config(cfg);
    // Every grid starts at 20 and steps by a multiple of 5, so exactly the
    // counts at 5-step offsets are covered: 81 counts minus 17 remain.
    CHECK(tests.size() == 64);
    std::set<int> got(tests.begin(), tests.end());
    CHECK(got.count(21) == 1);
    CHECK(got.count(99) == 1);
    for (int c = 20; c <= 100; c += 5) CHECK(got.count(c) == 0);
  }

  SUBCASE("declared counts must avoid every grid") {
    cfg.test_counts = {21, 22};
    CHECK(validate_experiment_config(cfg) == std::vector<int>{21, 22});
    cfg.test_counts = {21, 25};
    CHECK_THROWS_WITH_AS(validate_experiment_config(cfg),
                         doctest::Contains("appears in a training grid"), Error);
  }

  SUBCASE("a saturated range has nothing left to test") {
    cfg.multipliers = {1};
    CHECK_THROWS_WITH_AS(validate_experiment_config(cfg), doctest::Contains("no unseen"), Error);
  }

  SUBCASE("nonsense configs are rejected") {
    auto bad = cfg;
    bad.multipliers = {0};
    CHECK_THROWS_AS(validate_experiment_config(bad), Error);
    bad = cfg;
    bad.multipliers = {};
    CHECK_THROWS_AS(validate_experiment_config(bad), Error);
    bad = cfg;
    bad.count_hi = 10;
    CHECK_THROWS_AS(validate_experiment_config(bad), Error);
    bad = cfg;
    bad.out_dir = "";
    CHECK_THROWS_AS(validate_experiment_config(bad), Error);
    bad = cfg;
    bad.train_instances = 0;
    CHECK_THROWS_AS(validate_experiment_config(bad), Error);
  }
}

TEST_CASE("a desk-scale experiment trains one model per multiplier") {
  fixtures::TempDir tmp("exp");
  ExperimentConfig cfg;
  cfg.network = fixtures::tiny_network();
  cfg.gen = fixtures::tiny_gen();
  cfg.multipliers = {2, 3};
  cfg.count_lo = 2;
  cfg.count_hi = 4;
  cfg.test_counts = {3};
  cfg.train_instances = 4;
  cfg.test_instances = 2;
  cfg.val_fraction = 0.25;
  cfg.seed = 11;
  cfg.model.d_model = 8;
  cfg.model.heads = 2;
  cfg.model.cls_hidden1 = 8;
  cfg.model.cls_hidden2 = 8;
  cfg.trainer.epochs = 2;
  cfg.trainer.batch = 2;
  cfg.out_dir = tmp.path();

  std::ostringstream log;
  ExperimentReport report = run_experiment(cfg, &log);

  CHECK(report.test_counts == std::vector<int>{3});
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].multiplier == 2);
  CHECK(report.rows[1].multiplier == 3);
  for (const ExperimentRow& row : report.rows) {
    CHECK(row.metrics.n == 2);
    CHECK(row.metrics.feas >= 0.0);
  }

  CHECK(std::filesystem::exists(tmp.sub("test/manifest.json")));
  CHECK(std::filesystem::exists(tmp.sub("m2/manifest.json")));
  CHECK(std::filesystem::exists(tmp.sub("m3/manifest.json")));
  CHECK(std::filesystem::exists(tmp.sub("model_m2.ckpt")));
  CHECK(std::filesystem::exists(tmp.sub("model_m3.ckpt")));
  REQUIRE(std::filesystem::exists(tmp.sub("report.csv")));

  std::string csv = read_file(tmp.sub("report.csv"));
  CHECK(csv == experiment_csv(report));
  CHECK(csv.rfind("model,ACC_0,ACC_1,r_bar,l_bar,feas\n", 0) == 0);
  CHECK(csv.find("m=2,") != std::string::npos);
  CHECK(csv.find("m=3,") != std::string::npos);

  // Every training instance in the m-grids uses only covered EV counts, and
  // the shared test set only the held-out one.
  for (const auto& entry : instances::read_manifest(tmp.sub("m2")).entries)
    CHECK((entry.fleet_size == 2 || entry.fleet_size == 4));
  for (const auto& entry : instances::read_manifest(tmp.sub("m3")).entries)
    CHECK(entry.fleet_size == 2);
  for (const auto& entry : instances::read_manifest(tmp.sub("test")).entries)
    CHECK(entry.fleet_size == 3);

  // The stored checkpoints are calibrated and normalized.
  learner::Checkpoint ck = learner::read_checkpoint(tmp.sub("model_m2.ckpt"));
  CHECK(ck.has_thresholds);
  CHECK(ck.norm.valid);
  CHECK(ck.params.cfg.n_per_ev == 48);
  CHECK(ck.params.cfg.horizon == 6);
}
