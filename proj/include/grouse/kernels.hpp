#pragma once

// Hot inner loops over the ambient dimension n. The default entry points split
// the rows into fixed-size blocks processed in parallel with OpenMP; partial
// sums are reduced in block order, so results do not depend on the thread
// count. The `reference` namespace holds plain serial loops that the tests and
// the benchmark compare against.

#include "grouse/linalg.hpp"

namespace grouse::kernels {

/// Rows per parallel block. Fixed so the reduction order is reproducible.
inline constexpr Eigen::Index kRowBlock = 1024;

/// ŪᵀU for two n×d matrices.
Mat cross_gram(const Mat& ubar, const Mat& u);

/// ‖U − Ū a‖²_F for n×d U, Ū and d×d a.
double residual_frobenius_sq(const Mat& u, const Mat& ubar, const Mat& a);

/// u += left · rightᵀ (n-vector left, d-vector right).
void rank_one_update(Mat& u, const Vec& left, const Vec& right);

/// Number of threads the parallel kernels will use (1 without OpenMP).
int thread_count();

namespace reference {

Mat cross_gram(const Mat& ubar, const Mat& u);
double residual_frobenius_sq(const Mat& u, const Mat& ubar, const Mat& a);
void rank_one_update(Mat& u, const Vec& left, const Vec& right);

}  // namespace reference

}  // namespace grouse::kernels
