// Times the serial reference kernels against the parallel dispatch at a few
// matrix sizes and reports the speedup and the largest element difference.

#include <chrono>
#include <cmath>
#include <cstdio>

#include "evjrs/kernels.hpp"
#include "evjrs/mat.hpp"
#include "evjrs/rng.hpp"

using namespace evjrs;

namespace {

Mat random_mat(Rng& rng, int rows, int cols) {
  Mat m(rows, cols);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main() {
  Rng rng(12345);
  std::printf("threads %d\n", kernels::threads());
  std::printf("%6s %12s %12s %8s %10s\n", "n", "serial_s", "parallel_s", "speedup", "max_diff");
  for (int n : {64, 128, 256, 512}) {
    Mat a = random_mat(rng, n, n);
    Mat b = random_mat(rng, n, n);
    Mat cs(n, n), cp(n, n);
    int reps = n <= 128 ? 20 : 5;
    double ts = time_best_of(reps, [&] { kernels::serial::matmul(a, b, cs); });
    double tp = time_best_of(reps, [&] { kernels::parallel::matmul(a, b, cp); });
    double diff = 0.0;
    for (size_t i = 0; i < cs.data.size(); ++i)
      diff = std::max(diff, std::fabs(cs.data[i] - cp.data[i]));
    std::printf("%6d %12.6f %12.6f %8.2f %10.3e\n", n, ts, tp, ts / tp, diff);
  }
  return 0;
}
