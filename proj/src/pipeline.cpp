#include "evjrs/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "evjrs/common.hpp"
#include "evjrs/hashutil.hpp"
#include "evjrs/rng.hpp"

namespace evjrs::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string idx_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", i);
  return buf;
}

// Reconstructs the token-type column for a stored feature tensor from the
// instance's own dimensions.
instances::FeatureTensor load_features(const std::string& path,
                                       const instances::ProblemInstance& inst) {
  instances::FeatureTensor ft;
  ft.tokens = instances::read_tensor(path);
  int b = static_cast<int>(inst.network.distribution.buses.size());
  int s = static_cast<int>(inst.network.distribution.pv_units.size());
  int e = inst.fleet_size();
  if (ft.tokens.rows != 2 * b + s + e || ft.tokens.cols != inst.horizon)
    throw Error(ErrorCategory::validation,
                path + ": feature tensor is " + std::to_string(ft.tokens.rows) + "x" +
                    std::to_string(ft.tokens.cols) + ", instance needs " +
                    std::to_string(2 * b + s + e) + "x" + std::to_string(inst.horizon));
  for (int i = 0; i < b; ++i) ft.token_type.push_back(static_cast<int>(instances::TokenType::load_p));
  for (int i = 0; i < b; ++i) ft.token_type.push_back(static_cast<int>(instances::TokenType::load_q));
  for (int i = 0; i < s; ++i) ft.token_type.push_back(static_cast<int>(instances::TokenType::pv));
  for (int i = 0; i < e; ++i) ft.token_type.push_back(static_cast<int>(instances::TokenType::ev));
  ft.ev_count = e;
  return ft;
}

}  // namespace

int n_per_ev_for(const netmodel::Network& net, int horizon) {
  netmodel::TimeSpaceNetwork tsn = netmodel::build_tsn(net.transport, horizon);
  return mip::make_var_index(tsn, net, 1, 1).n_per_ev;
}

std::vector<learner::LabeledSample> label_dataset(const std::string& dir,
                                                  const solver::SolveConfig& cfg,
                                                  std::ostream* log,
                                                  const mip::BuildOptions& opts) {
  instances::DatasetManifest manifest = instances::read_manifest(dir);
  std::vector<learner::LabeledSample> samples;

  for (instances::DatasetEntry& entry : manifest.entries) {
    instances::ProblemInstance inst =
        instances::read_instance(dir + "/" + entry.instance_file);
    mip::MipModel det = mip::build_model(inst, true, 0, opts);
    solver::MipResult res = solver::solve_mip(det, cfg);
    if (res.status != mip::SolveStatus::optimal) {
      if (log)
        *log << "skipping entry " << entry.index << ": deterministic solve ended with "
             << mip::status_name(res.status) << "\n";
      continue;
    }

    int e = inst.fleet_size();
    int npe = det.index.n_per_ev;
    Mat label_mat(e, npe);
    learner::LabeledSample sample;
    sample.labels.resize(static_cast<size_t>(e) * npe);
    for (int k = 0; k < e; ++k)
      for (int i = 0; i < npe; ++i) {
        int bit = res.values[static_cast<size_t>(k) * npe + i] > 0.5 ? 1 : 0;
        label_mat(k, i) = bit;
        sample.labels[static_cast<size_t>(k) * npe + i] = static_cast<uint8_t>(bit);
      }

    entry.label_file = "labels/" + idx_name(entry.index) + ".bin";
    instances::write_tensor(dir + "/" + entry.label_file, label_mat);
    entry.objective = res.objective;
    entry.solve_seconds = res.wall_seconds;

    sample.features = load_features(dir + "/" + entry.feature_file, inst);
    sample.instance_hash = entry.instance_hash;
    sample.objective = res.objective;
    sample.solve_seconds = res.wall_seconds;
    samples.push_back(std::move(sample));
  }

  if (samples.empty())
    throw Error(ErrorCategory::solve, dir + ": no entry produced an optimal label solve");
  instances::write_manifest(dir, manifest);
  return samples;
}

std::vector<learner::LabeledSample> load_labeled(const std::string& dir) {
  instances::DatasetManifest manifest = instances::read_manifest(dir);
  std::vector<learner::LabeledSample> samples;
  for (const instances::DatasetEntry& entry : manifest.entries) {
    if (entry.label_file.empty()) continue;
    instances::ProblemInstance inst =
        instances::read_instance(dir + "/" + entry.instance_file);
    learner::LabeledSample sample;
    sample.features = load_features(dir + "/" + entry.feature_file, inst);
    Mat labels = instances::read_tensor(dir + "/" + entry.label_file);
    if (labels.rows != inst.fleet_size())
      throw Error(ErrorCategory::validation,
                  dir + "/" + entry.label_file + ": " + std::to_string(labels.rows) +
                      " label rows for " + std::to_string(inst.fleet_size()) + " EVs");
    sample.labels.resize(labels.data.size());
    for (size_t i = 0; i < labels.data.size(); ++i)
      sample.labels[i] = labels.data[i] > 0.5 ? 1 : 0;
    sample.instance_hash = entry.instance_hash;
    sample.objective = entry.objective;
    sample.solve_seconds = entry.solve_seconds;
    samples.push_back(std::move(sample));
  }
  if (samples.empty())
    throw Error(ErrorCategory::validation, dir + ": no labeled entries; run labeling first");
  return samples;
}

PruneOutcome prune_and_solve(const instances::ProblemInstance& inst,
                             const learner::TransformerParams& params,
                             const learner::Thresholds& th, const instances::NormStats& stats,
                             const solver::SolveConfig& cfg, const mip::BuildOptions& opts) {
  PruneOutcome out;

  auto t0 = Clock::now();
  mip::PartialAssignment pa = learner::predict_and_filter(params, th, stats, inst);
  out.inference_seconds = seconds_since(t0);
  out.fixed_bits = static_cast<long>(pa.fixes.size());

  mip::MipModel model = mip::build_model(inst, false, 0, opts);
  mip::MipModel pruned = mip::apply_fixings(model, pa);
  solver::MipResult res = solver::solve_mip(pruned, cfg);
  out.pruned_seconds = res.wall_seconds;
  out.nodes = res.nodes;

  if (res.status == mip::SolveStatus::optimal) {
    out.dl_feasible = true;
  } else {
    solver::MipResult full = solver::solve_mip(model, cfg);
    out.fallback_seconds = full.wall_seconds;
    out.nodes += full.nodes;
    res = std::move(full);
  }
  out.assisted_seconds = out.inference_seconds + out.pruned_seconds + out.fallback_seconds;
  out.solution.status = res.status;
  out.solution.objective = res.objective;
  out.solution.values = std::move(res.values);
  return out;
}

EvalMetrics evaluate(const std::vector<instances::ProblemInstance>& tests,
                     const learner::TransformerParams& params, const learner::Thresholds& th,
                     const instances::NormStats& stats, const solver::SolveConfig& cfg,
                     std::ostream* log, const mip::BuildOptions& opts, bool use_model) {
  if (tests.empty()) throw Error(ErrorCategory::validation, "evaluation needs test instances");

  EvalMetrics m;
  long correct[2] = {0, 0}, total[2] = {0, 0};
  double r_sum = 0.0, l_sum = 0.0;

  for (size_t i = 0; i < tests.size(); ++i) {
    const instances::ProblemInstance& inst = tests[i];

    // Deterministic labels for the accuracy tallies.
    mip::MipModel det = mip::build_model(inst, true, 0, opts);
    solver::MipResult label_res = solver::solve_mip(det, cfg);
    if (label_res.status != mip::SolveStatus::optimal) {
      if (log)
        *log << "skipping test sample " << i << ": label solve ended with "
             << mip::status_name(label_res.status) << "\n";
      continue;
    }
    instances::FeatureTensor ft = instances::encode_features(inst, 0);
    instances::apply_normalization(ft, stats);
    Mat probs = learner::forward(params, ft);
    int bits = inst.fleet_size() * det.index.n_per_ev;
    for (int j = 0; j < bits; ++j) {
      int y = label_res.values[j] > 0.5 ? 1 : 0;
      int pred = probs.data[j] >= 0.5 ? 1 : 0;
      ++total[y];
      if (pred == y) ++correct[y];
    }

    SampleRecord rec;
    rec.index = static_cast<int>(i);
    if (use_model) {
      PruneOutcome outcome = prune_and_solve(inst, params, th, stats, cfg, opts);
      rec.dl_feasible = outcome.dl_feasible;
      rec.t_assist = outcome.assisted_seconds;
      rec.v_assist = outcome.solution.objective;
      if (outcome.dl_feasible) {
        auto t0 = Clock::now();
        solver::MipResult plain = solver::solve_mip(mip::build_model(inst, false, 0, opts), cfg);
        rec.t_plain = seconds_since(t0);
        rec.v_plain = plain.objective;
        ++m.n_dl;
      } else {
        // The fallback run is the plain solve for this sample.
        rec.t_plain = outcome.fallback_seconds;
        rec.v_plain = outcome.solution.objective;
      }
    } else {
      // Model disabled: one plain solve serves as both records.
      auto t0 = Clock::now();
      solver::MipResult plain = solver::solve_mip(mip::build_model(inst, false, 0, opts), cfg);
      rec.dl_feasible = true;
      rec.t_assist = rec.t_plain = seconds_since(t0);
      rec.v_assist = rec.v_plain = plain.objective;
      ++m.n_dl;
    }
    r_sum += 1.0 - rec.t_assist / rec.t_plain;
    l_sum += (rec.v_assist - rec.v_plain) / rec.v_plain;
    m.samples.push_back(rec);
    ++m.n;
  }

  if (m.n == 0) throw Error(ErrorCategory::solve, "every test sample failed its label solve");
  m.acc0 = total[0] ? 100.0 * correct[0] / total[0] : 0.0;
  m.acc1 = total[1] ? 100.0 * correct[1] / total[1] : 0.0;
  m.r_bar = 100.0 * r_sum / m.n;
  m.l_bar = 100.0 * l_sum / m.n;
  m.feas = 100.0 * m.n_dl / m.n;
  return m;
}

std::string metrics_csv(const EvalMetrics& m) {
  std::ostringstream os;
  os << "ACC_0,ACC_1,r_bar,l_bar,feas\n";
  os << m.acc0 << "," << m.acc1 << "," << m.r_bar << "," << m.l_bar << "," << m.feas << "\n";
  os << "sample,t_assist,t_plain,v_assist,v_plain,dl_feasible\n";
  for (const SampleRecord& r : m.samples)
    os << r.index << "," << r.t_assist << "," << r.t_plain << "," << r.v_assist << ","
       << r.v_plain << "," << (r.dl_feasible ? 1 : 0) << "\n";
  return os.str();
}

std::vector<int> training_grid(int lo, int hi, int m) {
  std::vector<int> grid;
  for (int c = lo; c <= hi; c += m) grid.push_back(c);
  return grid;
}

std::vector<int> validate_experiment_config(const ExperimentConfig& cfg) {
  if (cfg.multipliers.empty())
    throw Error(ErrorCategory::config, "experiment needs at least one multiplier");
  if (cfg.count_lo < 1 || cfg.count_hi < cfg.count_lo)
    throw Error(ErrorCategory::config, "EV count range is empty");
  if (cfg.out_dir.empty()) throw Error(ErrorCategory::config, "experiment needs an output directory");
  if (cfg.train_instances < 1 || cfg.test_instances < 1)
    throw Error(ErrorCategory::config, "experiment needs at least one instance per dataset");

  std::set<int> covered;
  for (int m : cfg.multipliers) {
    if (m < 1) throw Error(ErrorCategory::config, "multiplier must be positive");
    std::vector<int> grid = training_grid(cfg.count_lo, cfg.count_hi, m);
    covered.insert(grid.begin(), grid.end());
  }

  std::vector<int> test_counts = cfg.test_counts;
  if (test_counts.empty()) {
    for (int c = cfg.count_lo; c <= cfg.count_hi; ++c)
      if (!covered.count(c)) test_counts.push_back(c);
    if (test_counts.empty())
      throw Error(ErrorCategory::config,
                  "the training grids cover every EV count in the range; no unseen "
                  "count is left for testing");
  } else {
    for (int c : test_counts)
      if (covered.count(c))
        throw Error(ErrorCategory::config, "test EV count " + std::to_string(c) +
                                               " appears in a training grid");
  }
  return test_counts;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  std::vector<int> test_counts = validate_experiment_config(cfg);

  // One shared stochastic test set.
  std::string test_dir = cfg.out_dir + "/test";
  instances::DatasetManifest test_manifest = instances::generate_dataset(
      test_dir, cfg.network, cfg.gen, child_seed(cfg.seed, 1), cfg.test_instances, test_counts);
  std::vector<instances::ProblemInstance> tests;
  for (const auto& entry : test_manifest.entries)
    tests.push_back(instances::read_instance(test_dir + "/" + entry.instance_file));

  learner::ModelConfig mc = cfg.model;
  mc.horizon = cfg.gen.horizon;
  mc.n_per_ev = n_per_ev_for(cfg.network, cfg.gen.horizon);

  ExperimentReport report;
  report.test_counts = test_counts;

  for (size_t gi = 0; gi < cfg.multipliers.size(); ++gi) {
    int mult = cfg.multipliers[gi];
    if (log) *log << "multiplier " << mult << ": generating and labeling\n";

    instances::GenConfig train_gen = cfg.gen;
    train_gen.scenario_count = 1;  // training uses the deterministic problem
    std::string dir = cfg.out_dir + "/m" + std::to_string(mult);
    instances::generate_dataset(dir, cfg.network, train_gen,
                                child_seed(cfg.seed, 100 + static_cast<uint64_t>(mult)),
                                cfg.train_instances,
                                training_grid(cfg.count_lo, cfg.count_hi, mult), mult);
    std::vector<learner::LabeledSample> samples = label_dataset(dir, cfg.solve, log);

    std::vector<int> train_idx, val_idx;
    instances::split_indices(static_cast<int>(samples.size()), cfg.val_fraction,
                             child_seed(cfg.seed, 200 + static_cast<uint64_t>(mult)), train_idx,
                             val_idx);

    std::vector<instances::FeatureTensor> train_feats;
    for (int idx : train_idx) train_feats.push_back(samples[idx].features);
    instances::NormStats stats = instances::compute_norm_stats(train_feats);
    for (learner::LabeledSample& s : samples) instances::apply_normalization(s.features, stats);

    std::vector<learner::LabeledSample> train_set, val_set;
    for (int idx : train_idx) train_set.push_back(samples[idx]);
    for (int idx : val_idx) val_set.push_back(samples[idx]);

    learner::TrainConfig tc = cfg.trainer;
    tc.seed = child_seed(cfg.trainer.seed, static_cast<uint64_t>(mult));
    auto [params, history] = learner::train(train_set, val_set, mc, tc, log);
    learner::Thresholds th = learner::calibrate_thresholds(params, val_set);

    learner::Checkpoint ck{params, stats, th, true};
    learner::write_checkpoint(cfg.out_dir + "/model_m" + std::to_string(mult) + ".ckpt", ck);

    if (log) *log << "multiplier " << mult << ": evaluating\n";
    ExperimentRow row;
    row.multiplier = mult;
    row.metrics = evaluate(tests, params, th, stats, cfg.solve, log);
    report.rows.push_back(std::move(row));
  }

  write_file(cfg.out_dir + "/report.csv", experiment_csv(report));
  return report;
}

std::string experiment_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "model,ACC_0,ACC_1,r_bar,l_bar,feas\n";
  for (const ExperimentRow& row : report.rows) {
    const EvalMetrics& m = row.metrics;
    os << "m=" << row.multiplier << "," << m.acc0 << "," << m.acc1 << "," << m.r_bar << ","
       << m.l_bar << "," << m.feas << "\n";
  }
  return os.str();
}

}  // namespace evjrs::pipeline
