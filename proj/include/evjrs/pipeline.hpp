#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "evjrs/instances.hpp"
#include "evjrs/learner.hpp"
#include "evjrs/mip.hpp"
#include "evjrs/netmodel.hpp"
#include "evjrs/solver.hpp"

namespace evjrs::pipeline {

// Solves every dataset entry in deterministic mode, writes the rounded
// binary labels under labels/ and the objectives into the manifest, and
// returns the samples with raw (unnormalized) features. Entries whose solve
// hits a limit are logged and left unlabeled; all entries failing is an error.
std::vector<learner::LabeledSample> label_dataset(const std::string& dir,
                                                  const solver::SolveConfig& cfg,
                                                  std::ostream* log = nullptr,
                                                  const mip::BuildOptions& opts = {});

// Reads back an already-labeled dataset: raw feature tensors plus stored
// label bits. Entries without a label file are skipped.
std::vector<learner::LabeledSample> load_labeled(const std::string& dir);

struct PruneOutcome {
  mip::Solution solution;
  bool dl_feasible = false;       // pruned solve reached optimal
  double inference_seconds = 0.0; // encode + normalize + predict, all scenarios
  double pruned_seconds = 0.0;
  double fallback_seconds = 0.0;  // unfixed re-solve when pruning failed
  double assisted_seconds = 0.0;  // inference + pruned (+ fallback)
  long fixed_bits = 0;
  long nodes = 0;
};

// Predicts, filters, pins the confident binaries and solves; on an
// infeasible pruned model falls back to the plain solve so the returned
// solution is always the exact optimum of some solve.
PruneOutcome prune_and_solve(const instances::ProblemInstance& inst,
                             const learner::TransformerParams& params,
                             const learner::Thresholds& th, const instances::NormStats& stats,
                             const solver::SolveConfig& cfg, const mip::BuildOptions& opts = {});

struct SampleRecord {
  int index = 0;
  double t_assist = 0.0;  // assisted wall seconds (inference + solves)
  double t_plain = 0.0;   // plain solver wall seconds
  double v_assist = 0.0;  // assisted objective
  double v_plain = 0.0;   // plain objective
  bool dl_feasible = false;
};

struct EvalMetrics {
  double acc0 = 0.0;   // % of label-0 bits predicted correctly at the 0.5 cutoff
  double acc1 = 0.0;   // % of label-1 bits
  double r_bar = 0.0;  // mean % solve-time reduction
  double l_bar = 0.0;  // mean % objective regression
  double feas = 0.0;   // % of samples the pruned solve handled
  int n = 0;
  int n_dl = 0;
  std::vector<SampleRecord> samples;
};

// Labels each test instance deterministically for the accuracy tallies, then
// times the assisted and plain solves. Failed pruned solves fall back and
// count against feas with the fallback time standing in for the plain time.
// With use_model false the solving path skips inference and pruning entirely,
// so the assisted and plain records coincide and r_bar = l_bar = 0 exactly.
EvalMetrics evaluate(const std::vector<instances::ProblemInstance>& tests,
                     const learner::TransformerParams& params, const learner::Thresholds& th,
                     const instances::NormStats& stats, const solver::SolveConfig& cfg,
                     std::ostream* log = nullptr, const mip::BuildOptions& opts = {},
                     bool use_model = true);

// Header row, one metric row, then a per-sample appendix.
std::string metrics_csv(const EvalMetrics& m);

struct ExperimentConfig {
  netmodel::Network network;
  instances::GenConfig gen;  // scenario settings apply to the test set;
                             // training sets are forced deterministic
  std::vector<int> multipliers;  // one model per entry
  int count_lo = 2;
  int count_hi = 6;
  std::vector<int> test_counts;  // empty: [lo,hi] minus every training grid
  int train_instances = 50;
  int test_instances = 10;
  double val_fraction = 0.1;
  uint64_t seed = 1;
  learner::ModelConfig model;    // n_per_ev and horizon filled from the network
  learner::TrainConfig trainer;
  solver::SolveConfig solve;
  std::string out_dir;
};

struct ExperimentRow {
  int multiplier = 0;
  EvalMetrics metrics;
};

struct ExperimentReport {
  std::vector<int> test_counts;
  std::vector<ExperimentRow> rows;
};

// EV counts a multiplier-m training dataset covers: lo, lo+m, lo+2m, ...
// capped at hi.
std::vector<int> training_grid(int lo, int hi, int m);

// Checks the experiment config and returns the test EV counts: the declared
// ones (which must avoid every training grid) or, when none are declared,
// the counts in [lo, hi] no grid covers. Throws on an inconsistent config.
std::vector<int> validate_experiment_config(const ExperimentConfig& cfg);

// Generates one training dataset per multiplier (EV counts lo, lo+m, ...),
// labels, trains and calibrates a model each, then evaluates all of them on
// one shared test set whose EV counts no model trained on.
ExperimentReport run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Comparison table: one row per trained model.
std::string experiment_csv(const ExperimentReport& report);

// Binary bits a single EV owns per scenario, fixed by network and horizon.
int n_per_ev_for(const netmodel::Network& net, int horizon);

}  // namespace evjrs::pipeline
