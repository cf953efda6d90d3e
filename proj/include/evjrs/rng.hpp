#pragma once

#include <cstdint>
#include <random>

namespace evjrs {

// splitmix64; used to derive independent child seeds from (master, ordinal).
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t child_seed(uint64_t master, uint64_t ordinal) {
  return splitmix64(splitmix64(master) ^ splitmix64(ordinal * 0x9e3779b97f4a7c15ULL + 1));
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    std::uniform_int_distribution<int> d(lo, hi);
    return d(engine_);
  }
  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(engine_);
  }
  double normal(double mean, double stddev) {
    std::normal_distribution<double> d(mean, stddev);
    return d(engine_);
  }
  template <typename It>
  void shuffle(It first, It last) {
    std::shuffle(first, last, engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace evjrs
