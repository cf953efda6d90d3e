#pragma once

// Shared desk-scale fixtures: a two-node transport network with one charging
// station and one congestible edge on a three-bus radial feeder, the
// 13-node benchmark transport network for counting checks, and a few
// hand-built instances with known behavior.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "evjrs/instances.hpp"
#include "evjrs/netmodel.hpp"

namespace fixtures {

inline evjrs::netmodel::Network tiny_network() {
  evjrs::netmodel::Network net;
  auto& tn = net.transport;
  // Four-hour timesteps at horizon 6: keep the per-span travel draw small
  // enough that a two-leg day never dips below the energy floor uncharged.
  tn.nodes = {1, 2};
  tn.edges.push_back({1, 2, 1, 2, 1.0});
  tn.edges.push_back({2, 1, 1, 2, 1.0});
  tn.cs_nodes = {1};

  auto& dn = net.distribution;
  dn.buses = {1, 2, 3};
  dn.lines.push_back({1, 2, 0.01, 0.02, 2000.0});
  dn.lines.push_back({2, 3, 0.01, 0.02, 1500.0});
  dn.dgs.push_back({1, -1e6, 1e6, -1e6, 1e6, 0.12});
  dn.pv_units = {2};
  dn.cs_bus_map = {{1, 3}};
  dn.root_bus = 1;
  dn.s_base_kva = 1000.0;
  return net;
}

inline evjrs::instances::GenConfig tiny_gen() {
  evjrs::instances::GenConfig cfg;
  cfg.horizon = 6;
  cfg.scenario_count = 1;
  cfg.od_pairs = {{1, 1}};
  cfg.first_nodes = {2};
  cfg.first_window_lo = 1;
  cfg.first_window_hi = 2;
  cfg.second_nodes = {1};
  cfg.second_window_lo = 3;
  cfg.second_window_hi = 4;
  cfg.e_min = 10.0;
  cfg.e_max = 50.0;
  cfg.e_init_lo = 25.0;
  cfg.e_init_hi = 40.0;
  cfg.p_ev_max = 20.0;
  cfg.eta = 0.05;
  cfg.price_charge = 0.10;
  cfg.price_discharge = 0.07;
  cfg.congestion_len_lo = 0;
  cfg.congestion_len_hi = 2;
  cfg.solar_shapes = {{0.0, 0.3, 0.8, 1.0, 0.6, 0.1}};
  cfg.solar_peak_lo = 20.0;
  cfg.solar_peak_hi = 40.0;
  cfg.solar_noise = 0.1;
  cfg.load_shapes = {{0.6, 0.7, 0.9, 1.0, 0.8, 0.7}};
  cfg.load_peak_lo = 50.0;
  cfg.load_peak_hi = 100.0;
  cfg.load_noise = 0.1;
  cfg.reactive_ratio = 0.3;
  cfg.max_retries = 50;
  return cfg;
}

inline evjrs::instances::ProblemInstance tiny_instance(uint64_t seed, int fleet = 2,
                                                       int scenarios = 1) {
  auto cfg = tiny_gen();
  cfg.scenario_count = scenarios;
  return evjrs::instances::generate_instance(tiny_network(), cfg, seed, fleet);
}

// One EV parked at the charging station all day, nothing to serve: zero
// loads, zero solar, configurable prices. Its optimal objective is zero
// whenever charging cannot be resold at a profit.
inline evjrs::instances::ProblemInstance idle_instance(double price_charge = 0.10,
                                                       double price_discharge = 0.07) {
  evjrs::instances::ProblemInstance inst;
  inst.network = tiny_network();
  inst.horizon = 6;
  inst.scenarios.probabilities = {1.0};
  inst.scenarios.solar.push_back(evjrs::Mat(1, 6));
  inst.loads.active = evjrs::Mat(3, 6);
  inst.loads.reactive = evjrs::Mat(3, 6);
  inst.fleet.evs.push_back({1, 30.0, 10.0, 50.0, 20.0});
  inst.fleet.eta = 0.05;
  inst.fleet.price_charge = price_charge;
  inst.fleet.price_discharge = price_discharge;
  inst.schedule.jobs.push_back({0, 1, 4});
  inst.congestion.flags.assign(5, 0);
  return inst;
}

// The 13-node, 19-link transport benchmark; spans scaled to one-hour steps.
inline evjrs::netmodel::TransportNetwork nd_transport() {
  evjrs::netmodel::TransportNetwork tn;
  for (int n = 1; n <= 13; ++n) tn.nodes.push_back(n);
  struct Link {
    int a, b, spans;
  };
  const Link links[] = {{1, 5, 1},  {1, 12, 1}, {4, 5, 1},  {4, 9, 2},  {5, 6, 1},
                        {5, 9, 1},  {6, 7, 1},  {6, 10, 2}, {7, 8, 1},  {7, 11, 1},
                        {8, 2, 1},  {9, 10, 1}, {9, 13, 1}, {10, 11, 1},{11, 2, 1},
                        {11, 3, 1}, {12, 6, 1}, {12, 8, 2}, {13, 3, 2}};
  for (const Link& l : links) {
    tn.edges.push_back({l.a, l.b, l.spans, l.spans + 1, 8.0});
    tn.edges.push_back({l.b, l.a, l.spans, l.spans + 1, 8.0});
  }
  tn.cs_nodes = {6, 9, 11};
  return tn;
}

// Unique scratch directory under the system temp root, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = (std::filesystem::temp_directory_path() /
             (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd())))
                .string();
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string sub(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

}  // namespace fixtures
