#include "grouse/kernels.hpp"

#include <algorithm>
#include <string>
#include <vector>

#ifdef GROUSE_HAVE_OPENMP
#include <omp.h>
#endif

namespace grouse::kernels {
namespace {

Eigen::Index block_count(Eigen::Index rows) { return (rows + kRowBlock - 1) / kRowBlock; }

void check_pair(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::shape, std::string(what) + ": shape mismatch");
  }
}

}  // namespace

int thread_count() {
#ifdef GROUSE_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

Mat cross_gram(const Mat& ubar, const Mat& u) {
  check_pair(ubar, u, "cross_gram");
  const Eigen::Index rows = u.rows();
  const Eigen::Index blocks = block_count(rows);
  std::vector<Mat> partial(static_cast<std::size_t>(blocks));

#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kRowBlock;
    const Eigen::Index len = std::min(kRowBlock, rows - begin);
    partial[static_cast<std::size_t>(b)].noalias() =
        ubar.middleRows(begin, len).transpose() * u.middleRows(begin, len);
  }

  Mat total = Mat::Zero(ubar.cols(), u.cols());
  for (const auto& p : partial) total += p;
  return total;
}

double residual_frobenius_sq(const Mat& u, const Mat& ubar, const Mat& a) {
  check_pair(ubar, u, "residual_frobenius_sq");
  const Eigen::Index rows = u.rows();
  const Eigen::Index blocks = block_count(rows);
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);

#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kRowBlock;
    const Eigen::Index len = std::min(kRowBlock, rows - begin);
    Mat diff = u.middleRows(begin, len);
    diff.noalias() -= ubar.middleRows(begin, len) * a;
    partial[static_cast<std::size_t>(b)] = diff.squaredNorm();
  }

  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void rank_one_update(Mat& u, const Vec& left, const Vec& right) {
  if (left.size() != u.rows() || right.size() != u.cols()) {
    throw Error(ErrorKind::shape, "rank_one_update: shape mismatch");
  }
  const Eigen::Index cols = u.cols();
  // Column-major storage: parallelize over columns so each thread owns
  // contiguous memory.
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < cols; ++j) {
    u.col(j) += right(j) * left;
  }
}

namespace reference {

Mat cross_gram(const Mat& ubar, const Mat& u) {
  check_pair(ubar, u, "cross_gram");
  Mat out = Mat::Zero(ubar.cols(), u.cols());
  for (Eigen::Index i = 0; i < ubar.cols(); ++i) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < u.rows(); ++k) acc += ubar(k, i) * u(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

double residual_frobenius_sq(const Mat& u, const Mat& ubar, const Mat& a) {
  check_pair(ubar, u, "residual_frobenius_sq");
  double total = 0.0;
  for (Eigen::Index k = 0; k < u.rows(); ++k) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      double entry = u(k, j);
      for (Eigen::Index i = 0; i < ubar.cols(); ++i) entry -= ubar(k, i) * a(i, j);
      total += entry * entry;
    }
  }
  return total;
}

void rank_one_update(Mat& u, const Vec& left, const Vec& right) {
  if (left.size() != u.rows() || right.size() != u.cols()) {
    throw Error(ErrorKind::shape, "rank_one_update: shape mismatch");
  }
  for (Eigen::Index k = 0; k < u.rows(); ++k) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) u(k, j) += left(k) * right(j);
  }
}

}  // namespace reference
}  // namespace grouse::kernels
