#include "evjrs/kernels.hpp"

#include <cassert>

#include "evjrs/common.hpp"

#ifdef EVJRS_HAVE_OPENMP
#include <omp.h>
#endif

namespace evjrs::kernels {

namespace {
int g_threads = 1;

void check_matmul(Mat& c, int m, int k, int n) {
  if (k < 0) throw Error(ErrorCategory::internal, "matmul: inner dimensions disagree");
  c.rows = m;
  c.cols = n;
  c.data.assign(static_cast<size_t>(m) * n, 0.0);
}

inline double dot(const double* x, const double* y, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}
}  // namespace

void set_threads(int n) { g_threads = n < 1 ? 1 : n; }
int threads() { return g_threads; }

namespace serial {

void matmul(const Mat& a, const Mat& b, Mat& c) {
  check_matmul(c, a.rows, a.cols == b.rows ? a.cols : -1, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = a.row_ptr(i);
    double* ci = c.row_ptr(i);
    for (int l = 0; l < a.cols; ++l) {
      const double v = ai[l];
      if (v == 0.0) continue;
      const double* bl = b.row_ptr(l);
      for (int j = 0; j < b.cols; ++j) ci[j] += v * bl[j];
    }
  }
}

void matmul_tn(const Mat& a, const Mat& b, Mat& c) {
  check_matmul(c, a.cols, a.rows == b.rows ? a.rows : -1, b.cols);
  for (int i = 0; i < a.cols; ++i) {
    double* ci = c.row_ptr(i);
    for (int l = 0; l < a.rows; ++l) {
      const double v = a(l, i);
      if (v == 0.0) continue;
      const double* bl = b.row_ptr(l);
      for (int j = 0; j < b.cols; ++j) ci[j] += v * bl[j];
    }
  }
}

void matmul_nt(const Mat& a, const Mat& b, Mat& c) {
  check_matmul(c, a.rows, a.cols == b.cols ? a.cols : -1, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = a.row_ptr(i);
    double* ci = c.row_ptr(i);
    for (int j = 0; j < b.rows; ++j) ci[j] = dot(ai, b.row_ptr(j), a.cols);
  }
}

}  // namespace serial

namespace parallel {

// Row-partitioned variants of the serial loops. Each output row is written
// by a single thread with the serial accumulation order, so the result is
// bitwise identical to the reference.

void matmul(const Mat& a, const Mat& b, Mat& c) {
  check_matmul(c, a.rows, a.cols == b.rows ? a.cols : -1, b.cols);
#ifdef EVJRS_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(g_threads)
#endif
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = a.row_ptr(i);
    double* ci = c.row_ptr(i);
    for (int l = 0; l < a.cols; ++l) {
      const double v = ai[l];
      if (v == 0.0) continue;
      const double* bl = b.row_ptr(l);
      for (int j = 0; j < b.cols; ++j) ci[j] += v * bl[j];
    }
  }
}

void matmul_tn(const Mat& a, const Mat& b, Mat& c) {
  check_matmul(c, a.cols, a.rows == b.rows ? a.rows : -1, b.cols);
#ifdef EVJRS_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(g_threads)
#endif
  for (int i = 0; i < a.cols; ++i) {
    double* ci = c.row_ptr(i);
    for (int l = 0; l < a.rows; ++l) {
      const double v = a(l, i);
      if (v == 0.0) continue;
      const double* bl = b.row_ptr(l);
      for (int j = 0; j < b.cols; ++j) ci[j] += v * bl[j];
    }
  }
}

void matmul_nt(const Mat& a, const Mat& b, Mat& c) {
  check_matmul(c, a.rows, a.cols == b.cols ? a.cols : -1, b.rows);
#ifdef EVJRS_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(g_threads)
#endif
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = a.row_ptr(i);
    double* ci = c.row_ptr(i);
    for (int j = 0; j < b.rows; ++j) ci[j] = dot(ai, b.row_ptr(j), a.cols);
  }
}

}  // namespace parallel

void matmul(const Mat& a, const Mat& b, Mat& c) {
  if (g_threads > 1) parallel::matmul(a, b, c);
  else serial::matmul(a, b, c);
}
void matmul_tn(const Mat& a, const Mat& b, Mat& c) {
  if (g_threads > 1) parallel::matmul_tn(a, b, c);
  else serial::matmul_tn(a, b, c);
}
void matmul_nt(const Mat& a, const Mat& b, Mat& c) {
  if (g_threads > 1) parallel::matmul_nt(a, b, c);
  else serial::matmul_nt(a, b, c);
}

Mat matmul(const Mat& a, const Mat& b) {
  Mat c;
  matmul(a, b, c);
  return c;
}
Mat matmul_tn(const Mat& a, const Mat& b) {
  Mat c;
  matmul_tn(a, b, c);
  return c;
}
Mat matmul_nt(const Mat& a, const Mat& b) {
  Mat c;
  matmul_nt(a, b, c);
  return c;
}

}  // namespace evjrs::kernels
