#include "evjrs/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evjrs/common.hpp"
#include "evjrs/hashutil.hpp"
#include "evjrs/instances.hpp"
#include "evjrs/jsonutil.hpp"
#include "evjrs/learner.hpp"
#include "evjrs/mip.hpp"
#include "evjrs/netmodel.hpp"
#include "evjrs/pipeline.hpp"
#include "evjrs/solver.hpp"

namespace evjrs::cli {

namespace {

using nlohmann::json;

constexpr const char* kConfigEnv = "EVJRS_CONFIG";

void print_hash_line(const char* role, const std::string& path, const std::string& hash) {
  std::cout << role << " " << path << " " << hash << "\n";
}

void print_file_hash(const char* role, const std::string& path) {
  print_hash_line(role, path, sha256_file(path));
}

// ---- Config file merging ----
//
// Config keys mirror flag names without the leading dashes. The config is
// applied before parsing, so explicit flags always win.

struct ConfigPatch {
  json values;

  bool has(const std::string& key) const { return values.contains(key); }
  template <typename T>
  void get(const std::string& key, T& out) const {
    if (values.contains(key)) out = values.at(key).get<T>();
  }
};

ConfigPatch load_config(const std::vector<std::string>& args, const std::set<std::string>& known,
                        const std::string& subcommand) {
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) {
    const char* env = std::getenv(kConfigEnv);
    if (env && *env) path = env;
  }
  ConfigPatch patch;
  if (path.empty()) return patch;
  patch.values = parse_json(read_file(path), path);
  reject_unknown_keys(patch.values, known, subcommand + " config " + path);
  return patch;
}

void merge_solver(const ConfigPatch& p, solver::SolveConfig& sc) {
  p.get("feas-tol", sc.feas_tol);
  p.get("int-tol", sc.int_tol);
  p.get("gap", sc.rel_gap);
  p.get("node-limit", sc.node_limit);
  p.get("time-limit", sc.time_limit);
  p.get("workers", sc.workers);
  p.get("verbose", sc.verbose);
}

void add_solver_flags(CLI::App* cmd, solver::SolveConfig& sc) {
  cmd->add_option("--feas-tol", sc.feas_tol, "LP feasibility tolerance");
  cmd->add_option("--int-tol", sc.int_tol, "binary integrality tolerance");
  cmd->add_option("--gap", sc.rel_gap, "relative MIP gap");
  cmd->add_option("--node-limit", sc.node_limit, "branch-and-bound node limit (0: off)");
  cmd->add_option("--time-limit", sc.time_limit, "solve wall-time limit in seconds (0: off)");
  cmd->add_option("--workers", sc.workers, "worker count (1 is bit-reproducible)");
  cmd->add_flag("--verbose", sc.verbose, "per-node solver log");
}

const std::set<std::string> kSolverKeys = {"feas-tol",   "int-tol", "gap",    "node-limit",
                                           "time-limit", "workers", "verbose"};

std::set<std::string> with_solver_keys(std::set<std::string> keys) {
  keys.insert(kSolverKeys.begin(), kSolverKeys.end());
  keys.insert("config");
  return keys;
}

// ---- Solution files ----

std::string solution_to_json_text(const mip::Solution& s) {
  json j;
  j["version"] = 1;
  j["status"] = mip::status_name(s.status);
  j["objective"] = s.objective;
  j["values"] = s.values;
  return j.dump(2) + "\n";
}

mip::Solution solution_from_json_text(const std::string& text, const std::string& what) {
  json j = parse_json(text, what);
  reject_unknown_keys(j, {"version", "status", "objective", "values"}, what);
  check_schema_version(j, 1, what);
  mip::Solution s;
  std::string name = j.at("status").get<std::string>();
  bool found = false;
  for (auto st : {mip::SolveStatus::optimal, mip::SolveStatus::infeasible,
                  mip::SolveStatus::unbounded, mip::SolveStatus::node_limit,
                  mip::SolveStatus::time_limit, mip::SolveStatus::stall}) {
    if (name == mip::status_name(st)) {
      s.status = st;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCategory::validation, what + ": unknown status '" + name + "'");
  s.objective = j.at("objective").get<double>();
  s.values = j.at("values").get<std::vector<double>>();
  return s;
}

learner::Checkpoint load_model(const std::string& path, bool need_thresholds) {
  learner::Checkpoint ck = learner::read_checkpoint(path);
  if (!ck.norm.valid)
    throw Error(ErrorCategory::config, path + ": checkpoint has no normalization statistics");
  if (need_thresholds && !ck.has_thresholds)
    throw Error(ErrorCategory::config,
                path + ": checkpoint has no calibrated thresholds; run calibrate first");
  return ck;
}

std::vector<instances::ProblemInstance> load_dataset_instances(const std::string& dir) {
  instances::DatasetManifest manifest = instances::read_manifest(dir);
  std::vector<instances::ProblemInstance> out;
  for (const auto& entry : manifest.entries)
    out.push_back(instances::read_instance(dir + "/" + entry.instance_file));
  return out;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Day-ahead EV routing and scheduling: exact solving plus a learned accelerator"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a seeded instance dataset");
  struct {
    std::string network, gen_config, out, config;
    uint64_t seed = 1;
    int count = 10;
    std::vector<int> fleet;
    int multiplier = 0;
  } g;
  gen->add_option("--network", g.network, "transport + distribution network JSON")->required();
  gen->add_option("--gen-config", g.gen_config, "generation protocol JSON")->required();
  gen->add_option("--out", g.out, "dataset directory to create")->required();
  gen->add_option("--seed", g.seed, "master seed");
  gen->add_option("--count", g.count, "instances to generate");
  gen->add_option("--fleet", g.fleet, "EV counts to cycle through")->delimiter(',');
  gen->add_option("--multiplier", g.multiplier, "dataset multiplier tag");
  gen->add_option("--config", g.config, "defaults file (flags win)");

  // label
  auto* label = app.add_subcommand("label", "solve every entry and store optimal binaries");
  struct {
    std::string data, config;
    solver::SolveConfig solve;
  } lb;
  label->add_option("--data", lb.data, "dataset directory")->required();
  label->add_option("--config", lb.config, "defaults file (flags win)");
  add_solver_flags(label, lb.solve);

  // train
  auto* train = app.add_subcommand("train", "fit the predictor on a labeled dataset");
  struct {
    std::string data, out, config;
    int epochs = 20, batch = 8;
    double lr = 1e-3;
    uint64_t seed = 1, split_seed = 1;
    double val_fraction = 0.1;
    int d_model = 32, heads = 4, hidden1 = 64, hidden2 = 64;
  } tr;
  train->add_option("--data", tr.data, "labeled dataset directory")->required();
  train->add_option("--out", tr.out, "checkpoint file to write")->required();
  train->add_option("--epochs", tr.epochs, "training epochs");
  train->add_option("--batch", tr.batch, "batch size");
  train->add_option("--lr", tr.lr, "learning rate");
  train->add_option("--seed", tr.seed, "parameter init / shuffle seed");
  train->add_option("--split-seed", tr.split_seed, "train/validation split seed");
  train->add_option("--val-fraction", tr.val_fraction, "validation share");
  train->add_option("--d-model", tr.d_model, "model width");
  train->add_option("--heads", tr.heads, "attention heads");
  train->add_option("--hidden1", tr.hidden1, "first classifier hidden size");
  train->add_option("--hidden2", tr.hidden2, "second classifier hidden size");
  train->add_option("--config", tr.config, "defaults file (flags win)");

  // calibrate
  auto* calib = app.add_subcommand("calibrate", "set fixing thresholds from validation bits");
  struct {
    std::string data, model, out, config;
    double val_fraction = 0.1;
    uint64_t split_seed = 1;
  } cb;
  calib->add_option("--data", cb.data, "labeled dataset directory")->required();
  calib->add_option("--model", cb.model, "trained checkpoint")->required();
  calib->add_option("--out", cb.out, "calibrated checkpoint to write")->required();
  calib->add_option("--val-fraction", cb.val_fraction, "validation share");
  calib->add_option("--split-seed", cb.split_seed, "train/validation split seed");
  calib->add_option("--config", cb.config, "defaults file (flags win)");

  // solve
  auto* solve = app.add_subcommand("solve", "solve one instance, optionally model-assisted");
  struct {
    std::string instance, model, solution, config;
    bool no_model = false;
    solver::SolveConfig solve;
  } sv;
  solve->add_option("--instance", sv.instance, "instance JSON")->required();
  solve->add_option("--model", sv.model, "calibrated checkpoint for pruning");
  solve->add_flag("--no-model", sv.no_model, "force the plain exact solve");
  solve->add_option("--solution", sv.solution, "solution JSON to write");
  solve->add_option("--config", sv.config, "defaults file (flags win)");
  add_solver_flags(solve, sv.solve);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "score a model on a test dataset");
  struct {
    std::string data, model, out, config;
    solver::SolveConfig solve;
  } ev;
  eval->add_option("--data", ev.data, "test dataset directory")->required();
  eval->add_option("--model", ev.model, "calibrated checkpoint")->required();
  eval->add_option("--out", ev.out, "metrics CSV to write")->required();
  eval->add_option("--config", ev.config, "defaults file (flags win)");
  add_solver_flags(eval, ev.solve);

  // experiment
  auto* exp = app.add_subcommand("experiment", "train one model per multiplier and compare");
  struct {
    std::string network, gen_config, out, config;
    std::vector<int> multipliers;
    int count_lo = 2, count_hi = 6;
    std::vector<int> test_counts;
    int train_instances = 50, test_instances = 10;
    double val_fraction = 0.1;
    uint64_t seed = 1;
    int epochs = 20, batch = 8;
    double lr = 1e-3;
    uint64_t train_seed = 1;
    int d_model = 32, heads = 4, hidden1 = 64, hidden2 = 64;
    solver::SolveConfig solve;
  } ex;
  exp->add_option("--network", ex.network, "network JSON")->required();
  exp->add_option("--gen-config", ex.gen_config, "generation protocol JSON")->required();
  exp->add_option("--out", ex.out, "experiment output directory")->required();
  exp->add_option("--multipliers", ex.multipliers, "EV count step per model")->delimiter(',');
  exp->add_option("--count-lo", ex.count_lo, "smallest EV count");
  exp->add_option("--count-hi", ex.count_hi, "largest EV count");
  exp->add_option("--test-counts", ex.test_counts, "explicit unseen test counts")->delimiter(',');
  exp->add_option("--train-instances", ex.train_instances, "instances per training dataset");
  exp->add_option("--test-instances", ex.test_instances, "shared test instances");
  exp->add_option("--val-fraction", ex.val_fraction, "validation share");
  exp->add_option("--seed", ex.seed, "experiment master seed");
  exp->add_option("--epochs", ex.epochs, "training epochs");
  exp->add_option("--batch", ex.batch, "batch size");
  exp->add_option("--lr", ex.lr, "learning rate");
  exp->add_option("--train-seed", ex.train_seed, "trainer seed");
  exp->add_option("--d-model", ex.d_model, "model width");
  exp->add_option("--heads", ex.heads, "attention heads");
  exp->add_option("--hidden1", ex.hidden1, "first classifier hidden size");
  exp->add_option("--hidden2", ex.hidden2, "second classifier hidden size");
  exp->add_option("--config", ex.config, "defaults file (flags win)");
  add_solver_flags(exp, ex.solve);

  // verify
  auto* verify = app.add_subcommand("verify", "re-check a solution against its instance");
  struct {
    std::string instance, solution, config;
    double tol = 1e-6;
  } vf;
  verify->add_option("--instance", vf.instance, "instance JSON")->required();
  verify->add_option("--solution", vf.solution, "solution JSON")->required();
  verify->add_option("--tol", vf.tol, "residual tolerance");
  verify->add_option("--config", vf.config, "defaults file (flags win)");

  // Apply config-file defaults for the requested subcommand before parsing.
  std::string sub = args.empty() || args[0].empty() || args[0][0] == '-' ? "" : args[0];
  if (sub == "gen") {
    ConfigPatch p = load_config(args, {"network", "gen-config", "out", "seed", "count", "fleet",
                                       "multiplier", "config"},
                                sub);
    p.get("network", g.network);
    p.get("gen-config", g.gen_config);
    p.get("out", g.out);
    p.get("seed", g.seed);
    p.get("count", g.count);
    p.get("fleet", g.fleet);
    p.get("multiplier", g.multiplier);
  } else if (sub == "label") {
    ConfigPatch p = load_config(args, with_solver_keys({"data"}), sub);
    p.get("data", lb.data);
    merge_solver(p, lb.solve);
  } else if (sub == "train") {
    ConfigPatch p = load_config(args, {"data", "out", "epochs", "batch", "lr", "seed",
                                       "split-seed", "val-fraction", "d-model", "heads",
                                       "hidden1", "hidden2", "config"},
                                sub);
    p.get("data", tr.data);
    p.get("out", tr.out);
    p.get("epochs", tr.epochs);
    p.get("batch", tr.batch);
    p.get("lr", tr.lr);
    p.get("seed", tr.seed);
    p.get("split-seed", tr.split_seed);
    p.get("val-fraction", tr.val_fraction);
    p.get("d-model", tr.d_model);
    p.get("heads", tr.heads);
    p.get("hidden1", tr.hidden1);
    p.get("hidden2", tr.hidden2);
  } else if (sub == "calibrate") {
    ConfigPatch p = load_config(
        args, {"data", "model", "out", "val-fraction", "split-seed", "config"}, sub);
    p.get("data", cb.data);
    p.get("model", cb.model);
    p.get("out", cb.out);
    p.get("val-fraction", cb.val_fraction);
    p.get("split-seed", cb.split_seed);
  } else if (sub == "solve") {
    ConfigPatch p =
        load_config(args, with_solver_keys({"instance", "model", "no-model", "solution"}), sub);
    p.get("instance", sv.instance);
    p.get("model", sv.model);
    p.get("no-model", sv.no_model);
    p.get("solution", sv.solution);
    merge_solver(p, sv.solve);
  } else if (sub == "evaluate") {
    ConfigPatch p = load_config(args, with_solver_keys({"data", "model", "out"}), sub);
    p.get("data", ev.data);
    p.get("model", ev.model);
    p.get("out", ev.out);
    merge_solver(p, ev.solve);
  } else if (sub == "experiment") {
    ConfigPatch p = load_config(
        args, with_solver_keys({"network", "gen-config", "out", "multipliers", "count-lo",
                                "count-hi", "test-counts", "train-instances", "test-instances",
                                "val-fraction", "seed", "epochs", "batch", "lr", "train-seed",
                                "d-model", "heads", "hidden1", "hidden2"}),
        sub);
    p.get("network", ex.network);
    p.get("gen-config", ex.gen_config);
    p.get("out", ex.out);
    p.get("multipliers", ex.multipliers);
    p.get("count-lo", ex.count_lo);
    p.get("count-hi", ex.count_hi);
    p.get("test-counts", ex.test_counts);
    p.get("train-instances", ex.train_instances);
    p.get("test-instances", ex.test_instances);
    p.get("val-fraction", ex.val_fraction);
    p.get("seed", ex.seed);
    p.get("epochs", ex.epochs);
    p.get("batch", ex.batch);
    p.get("lr", ex.lr);
    p.get("train-seed", ex.train_seed);
    p.get("d-model", ex.d_model);
    p.get("heads", ex.heads);
    p.get("hidden1", ex.hidden1);
    p.get("hidden2", ex.hidden2);
    merge_solver(p, ex.solve);
  } else if (sub == "verify") {
    ConfigPatch p = load_config(args, {"instance", "solution", "tol", "config"}, sub);
    p.get("instance", vf.instance);
    p.get("solution", vf.solution);
    p.get("tol", vf.tol);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorCategory::usage);
  }

  if (gen->parsed()) {
    if (g.fleet.empty())
      throw Error(ErrorCategory::config, "gen needs at least one --fleet size");
    netmodel::Network net = netmodel::network_from_json(read_file(g.network));
    instances::GenConfig gc = instances::gen_config_from_json(read_file(g.gen_config));
    instances::generate_dataset(g.out, net, gc, g.seed, g.count, g.fleet, g.multiplier);
    print_file_hash("input", g.network);
    print_file_hash("input", g.gen_config);
    print_hash_line("output", g.out, instances::dataset_content_hash(g.out));
    return 0;
  }

  if (label->parsed()) {
    print_hash_line("input", lb.data, instances::dataset_content_hash(lb.data));
    auto samples = pipeline::label_dataset(lb.data, lb.solve, &std::cout);
    std::cout << "labeled " << samples.size() << " samples\n";
    print_hash_line("output", lb.data, instances::dataset_content_hash(lb.data));
    return 0;
  }

  if (train->parsed()) {
    print_hash_line("input", tr.data, instances::dataset_content_hash(tr.data));
    auto samples = pipeline::load_labeled(tr.data);
    std::vector<int> train_idx, val_idx;
    instances::split_indices(static_cast<int>(samples.size()), tr.val_fraction, tr.split_seed,
                             train_idx, val_idx);
    std::vector<instances::FeatureTensor> train_feats;
    for (int i : train_idx) train_feats.push_back(samples[i].features);
    instances::NormStats stats = instances::compute_norm_stats(train_feats);
    for (auto& s : samples) instances::apply_normalization(s.features, stats);
    std::vector<learner::LabeledSample> train_set, val_set;
    for (int i : train_idx) train_set.push_back(samples[i]);
    for (int i : val_idx) val_set.push_back(samples[i]);

    learner::ModelConfig mc;
    mc.d_model = tr.d_model;
    mc.heads = tr.heads;
    mc.cls_hidden1 = tr.hidden1;
    mc.cls_hidden2 = tr.hidden2;
    mc.horizon = samples[0].features.tokens.cols;
    mc.n_per_ev =
        static_cast<int>(samples[0].labels.size()) / samples[0].features.ev_count;
    learner::TrainConfig tc;
    tc.epochs = tr.epochs;
    tc.batch = tr.batch;
    tc.lr = tr.lr;
    tc.seed = tr.seed;
    auto [params, history] = learner::train(train_set, val_set, mc, tc, &std::cout);
    learner::Checkpoint ck{std::move(params), stats, {}, false};
    learner::write_checkpoint(tr.out, ck);
    print_file_hash("output", tr.out);
    return 0;
  }

  if (calib->parsed()) {
    print_hash_line("input", cb.data, instances::dataset_content_hash(cb.data));
    print_file_hash("input", cb.model);
    learner::Checkpoint ck = load_model(cb.model, false);
    auto samples = pipeline::load_labeled(cb.data);
    for (auto& s : samples) instances::apply_normalization(s.features, ck.norm);
    std::vector<int> train_idx, val_idx;
    instances::split_indices(static_cast<int>(samples.size()), cb.val_fraction, cb.split_seed,
                             train_idx, val_idx);
    std::vector<learner::LabeledSample> val_set;
    for (int i : val_idx) val_set.push_back(samples[i]);
    ck.thresholds = learner::calibrate_thresholds(ck.params, val_set);
    ck.has_thresholds = true;
    std::cout << "thr_0 " << ck.thresholds.thr_0 << " thr_1 " << ck.thresholds.thr_1 << "\n";
    learner::write_checkpoint(cb.out, ck);
    print_file_hash("output", cb.out);
    return 0;
  }

  if (solve->parsed()) {
    print_file_hash("input", sv.instance);
    instances::ProblemInstance inst = instances::read_instance(sv.instance);
    if (sv.solve.verbose && !sv.solve.log) sv.solve.log = &std::cout;
    mip::Solution sol;
    if (!sv.model.empty() && !sv.no_model) {
      print_file_hash("input", sv.model);
      learner::Checkpoint ck = load_model(sv.model, true);
      pipeline::PruneOutcome outcome =
          pipeline::prune_and_solve(inst, ck.params, ck.thresholds, ck.norm, sv.solve);
      std::cout << "fixed " << outcome.fixed_bits << " bits, "
                << (outcome.dl_feasible ? "pruned solve succeeded" : "fell back to plain solve")
                << "\n";
      sol = std::move(outcome.solution);
    } else {
      solver::MipResult res = solver::solve_mip(mip::build_model(inst), sv.solve);
      sol.status = res.status;
      sol.objective = res.objective;
      sol.values = std::move(res.values);
      std::cout << "nodes " << res.nodes << " iterations " << res.iterations << " seconds "
                << res.wall_seconds << "\n";
    }
    std::cout << "status " << mip::status_name(sol.status) << " objective " << sol.objective
              << "\n";
    if (!sv.solution.empty()) {
      write_file(sv.solution, solution_to_json_text(sol));
      print_file_hash("output", sv.solution);
    }
    return sol.status == mip::SolveStatus::optimal ? 0
                                                   : static_cast<int>(ErrorCategory::solve);
  }

  if (eval->parsed()) {
    print_hash_line("input", ev.data, instances::dataset_content_hash(ev.data));
    print_file_hash("input", ev.model);
    learner::Checkpoint ck = load_model(ev.model, true);
    auto tests = load_dataset_instances(ev.data);
    pipeline::EvalMetrics metrics =
        pipeline::evaluate(tests, ck.params, ck.thresholds, ck.norm, ev.solve, &std::cout);
    write_file(ev.out, pipeline::metrics_csv(metrics));
    std::cout << "ACC_0 " << metrics.acc0 << " ACC_1 " << metrics.acc1 << " r_bar "
              << metrics.r_bar << " l_bar " << metrics.l_bar << " feas " << metrics.feas << "\n";
    print_file_hash("output", ev.out);
    return 0;
  }

  if (exp->parsed()) {
    print_file_hash("input", ex.network);
    print_file_hash("input", ex.gen_config);
    pipeline::ExperimentConfig ec;
    ec.network = netmodel::network_from_json(read_file(ex.network));
    ec.gen = instances::gen_config_from_json(read_file(ex.gen_config));
    ec.multipliers = ex.multipliers;
    ec.count_lo = ex.count_lo;
    ec.count_hi = ex.count_hi;
    ec.test_counts = ex.test_counts;
    ec.train_instances = ex.train_instances;
    ec.test_instances = ex.test_instances;
    ec.val_fraction = ex.val_fraction;
    ec.seed = ex.seed;
    ec.model.d_model = ex.d_model;
    ec.model.heads = ex.heads;
    ec.model.cls_hidden1 = ex.hidden1;
    ec.model.cls_hidden2 = ex.hidden2;
    ec.trainer.epochs = ex.epochs;
    ec.trainer.batch = ex.batch;
    ec.trainer.lr = ex.lr;
    ec.trainer.seed = ex.train_seed;
    ec.solve = ex.solve;
    ec.out_dir = ex.out;
    pipeline::ExperimentReport report = pipeline::run_experiment(ec, &std::cout);
    std::cout << pipeline::experiment_csv(report);
    print_file_hash("output", ex.out + "/report.csv");
    return 0;
  }

  if (verify->parsed()) {
    print_file_hash("input", vf.instance);
    print_file_hash("input", vf.solution);
    instances::ProblemInstance inst = instances::read_instance(vf.instance);
    mip::Solution sol = solution_from_json_text(read_file(vf.solution), vf.solution);
    mip::ViolationReport report = mip::verify_solution(inst, sol, false, 0, {}, vf.tol);
    for (const std::string& v : report.violations) std::cout << "violation: " << v << "\n";
    std::cout << "max residual " << report.max_residual << "\n";
    if (!report.ok())
      throw Error(ErrorCategory::validation, "solution failed verification (" +
                                                 std::to_string(report.violations.size()) +
                                                 " violations)");
    std::cout << "solution verifies\n";
    return 0;
  }

  return static_cast<int>(ErrorCategory::usage);
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  try {
    return run(args);
  } catch (const Error& e) {
    std::cerr << "error: " << category_name(e.category()) << ": " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return static_cast<int>(ErrorCategory::internal);
  }
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args);
}

}  // namespace evjrs::cli
