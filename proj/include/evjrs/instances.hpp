#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evjrs/mat.hpp"
#include "evjrs/netmodel.hpp"

namespace evjrs::instances {

// Per-scenario solar forecast: one pv_units x horizon matrix per scenario.
struct ScenarioSet {
  std::vector<double> probabilities;
  std::vector<Mat> solar;  // kW
  int count() const { return static_cast<int>(probabilities.size()); }
};

struct LoadProfile {
  Mat active;    // buses x horizon, kW; row order follows DistributionNetwork::buses
  Mat reactive;  // kvar
};

struct EvSpec {
  int start_node = 0;
  double e_init = 0.0;   // kWh
  double e_min = 0.0;
  double e_max = 0.0;
  double p_ev_max = 0.0;  // kW
};

struct FleetSpec {
  std::vector<EvSpec> evs;
  double eta = 0.0;              // charge/discharge inefficiency, shared
  double price_charge = 0.0;     // $/kWh
  double price_discharge = 0.0;  // $/kWh
};

// EV `ev` must be at node `node` at timestep `span` (it departs that node
// during span `span`). Spans are 0-based throughout: 0 <= span < horizon-1.
struct JobTuple {
  int ev = 0;
  int node = 0;
  int span = 0;
};

struct JobSchedule {
  std::vector<JobTuple> jobs;
};

struct CongestionProfile {
  std::vector<int> flags;  // one 0/1 entry per span
};

struct ProblemInstance {
  netmodel::Network network;
  int horizon = 0;
  ScenarioSet scenarios;
  LoadProfile loads;
  FleetSpec fleet;
  JobSchedule schedule;
  CongestionProfile congestion;

  int fleet_size() const { return static_cast<int>(fleet.evs.size()); }
  double dt_hours() const { return 24.0 / horizon; }
};

netmodel::ValidationReport validate_instance(const ProblemInstance& inst);

// Generation config. Windows are inclusive 0-based span ranges; the caller
// converts clock hours using dt = 24/horizon.
struct GenConfig {
  int horizon = 6;
  int scenario_count = 1;

  // Fleet / schedules
  std::vector<std::pair<int, int>> od_pairs;  // (start, end)
  std::vector<int> first_nodes;               // mid-day destinations
  int first_window_lo = 1, first_window_hi = 2;
  std::vector<int> second_nodes;              // evening destinations
  int second_window_lo = 3, second_window_hi = 4;
  std::vector<int> flip_start_nodes;  // starts whose two node sets swap windows

  double e_min = 10.0, e_max = 50.0;
  double e_init_lo = 25.0, e_init_hi = 40.0;
  double p_ev_max = 20.0;
  double eta = 0.05;
  double price_charge = 0.10, price_discharge = 0.07;

  // Congestion: one contiguous window of random length and placement.
  int congestion_len_lo = 0, congestion_len_hi = 1;

  // Solar: per scenario and PV unit, a pool shape scaled by a random peak and
  // perturbed multiplicatively ("mix and match").
  std::vector<std::vector<double>> solar_shapes;  // each length = horizon, in [0,1]
  double solar_peak_lo = 0.0, solar_peak_hi = 0.0;  // kW
  double solar_noise = 0.1;

  // Loads: same pool idea per bus; reactive = ratio * active.
  std::vector<std::vector<double>> load_shapes;
  double load_peak_lo = 0.0, load_peak_hi = 0.0;  // kW
  double load_noise = 0.1;
  double reactive_ratio = 0.3;

  int max_retries = 50;
};

GenConfig gen_config_from_json(const std::string& text);
std::string gen_config_to_json(const GenConfig& cfg);

// Seeded, deterministic instance generation per the day-ahead protocol:
// every EV gets an (o,d) pair, one destination in each of the two windows
// (sets swapped when the start node is in flip_start_nodes), plus an implicit
// end-of-day job pinning it at d at the final span. Schedules are re-drawn
// up to cfg.max_retries times until reachable under the drawn congestion.
ProblemInstance generate_instance(const netmodel::Network& net, const GenConfig& cfg,
                                  uint64_t seed, int fleet_size);

// ---- Feature encoding ----

enum class TokenType { load_p = 0, load_q = 1, pv = 2, ev = 3 };

struct FeatureTensor {
  Mat tokens;                   // (2b + s + e) x horizon
  std::vector<int> token_type;  // per row
  int ev_count = 0;
};

// Min-max statistics per token type, fit on the training split.
struct NormStats {
  bool valid = false;
  double lo[4] = {0, 0, 0, 0};
  double hi[4] = {0, 0, 0, 0};
};

// Raw (unnormalized) features for one scenario: rows are load P per bus,
// load Q per bus, solar per PV unit, then one row per EV holding the job
// node id scaled to (0,1] at deadline columns and 0 elsewhere.
FeatureTensor encode_features(const ProblemInstance& inst, int scenario);

NormStats compute_norm_stats(const std::vector<FeatureTensor>& samples);
void apply_normalization(FeatureTensor& ft, const NormStats& stats);

// ---- Files ----

// Flat binary tensor: magic "EVTN", u32 version, u64 rows, u64 cols,
// row-major little-endian f64 payload.
void write_tensor(const std::string& path, const Mat& m);
Mat read_tensor(const std::string& path);

std::string instance_to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const std::string& text);
void write_instance(const std::string& path, const ProblemInstance& inst);
ProblemInstance read_instance(const std::string& path);

// ---- Datasets ----

struct DatasetEntry {
  int index = 0;
  uint64_t seed = 0;
  int fleet_size = 0;
  std::string instance_file;  // relative to dataset dir
  std::string feature_file;
  std::string label_file;  // empty until labeled
  std::string instance_hash;
  double objective = 0.0;      // deterministic solve, set by labeling
  double solve_seconds = 0.0;  // excluded from content hashing
};

struct DatasetManifest {
  uint64_t master_seed = 0;
  int multiplier = 0;
  std::vector<int> ev_counts;
  std::vector<DatasetEntry> entries;
};

void write_manifest(const std::string& dir, const DatasetManifest& m);
DatasetManifest read_manifest(const std::string& dir);

// Hash over instance/feature/label payload files (manifest and timing
// excluded so re-runs with the same seed hash identically).
std::string dataset_content_hash(const std::string& dir);

// Generates n instances under dir with fleet sizes cycling through ev_counts
// so each count gets floor(n/|counts|) or ceil(n/|counts|) instances, and
// writes instances/, features/ and the manifest. Labels come later.
DatasetManifest generate_dataset(const std::string& dir, const netmodel::Network& net,
                                 const GenConfig& cfg, uint64_t master_seed, int n,
                                 const std::vector<int>& ev_counts, int multiplier = 0);

// Seeded 90/10-style split of [0, n) by shuffled assignment.
void split_indices(int n, double val_fraction, uint64_t seed, std::vector<int>& train,
                   std::vector<int>& val);

}  // namespace evjrs::instances
