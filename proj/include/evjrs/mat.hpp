#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace evjrs {

// Dense row-major matrix of doubles. Plain value type, no views.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int r, int c) {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<size_t>(r) * cols + c];
  }
  double operator()(int r, int c) const {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<size_t>(r) * cols + c];
  }

  double* row_ptr(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row_ptr(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return data.size(); }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  bool operator==(const Mat& o) const = default;
};

}  // namespace evjrs
