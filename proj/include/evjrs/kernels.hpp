#pragma once

#include "evjrs/mat.hpp"

namespace evjrs::kernels {

// Global thread count for the parallel kernels. 1 selects the serial path.
// Every kernel assigns each output element to exactly one thread and keeps
// the inner accumulation order identical to the serial reference, so results
// are bitwise equal for any thread count.
void set_threads(int n);
int threads();

namespace serial {
// C = A * B
void matmul(const Mat& a, const Mat& b, Mat& c);
// C = A^T * B
void matmul_tn(const Mat& a, const Mat& b, Mat& c);
// C = A * B^T
void matmul_nt(const Mat& a, const Mat& b, Mat& c);
}  // namespace serial

namespace parallel {
void matmul(const Mat& a, const Mat& b, Mat& c);
void matmul_tn(const Mat& a, const Mat& b, Mat& c);
void matmul_nt(const Mat& a, const Mat& b, Mat& c);
}  // namespace parallel

// Dispatching entry points used by the rest of the library.
void matmul(const Mat& a, const Mat& b, Mat& c);
void matmul_tn(const Mat& a, const Mat& b, Mat& c);
void matmul_nt(const Mat& a, const Mat& b, Mat& c);

Mat matmul(const Mat& a, const Mat& b);
Mat matmul_tn(const Mat& a, const Mat& b);
Mat matmul_nt(const Mat& a, const Mat& b);

}  // namespace evjrs::kernels
