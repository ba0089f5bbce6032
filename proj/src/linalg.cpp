#include "grouse/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace grouse {

void require_finite(const Mat& a, const char* what) {
  if (!a.allFinite()) {
    throw Error(ErrorKind::non_finite, std::string(what) + ": non-finite entries");
  }
}

Mat orthonormalize(const Mat& a, const LinalgTolerances& tol) {
  const auto n = a.rows();
  const auto d = a.cols();
  if (d < 1 || n < d) {
    throw Error(ErrorKind::shape, "orthonormalize: shape requires n >= d >= 1");
  }
  require_finite(a, "orthonormalize");

  Eigen::HouseholderQR<Mat> qr(a);
  const Mat r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  const Vec diag = r.diagonal();
  const double largest = diag.cwiseAbs().maxCoeff();
  if (!(largest > 0.0) || diag.cwiseAbs().minCoeff() <= tol.rank_ratio * largest) {
    throw Error(ErrorKind::rank_deficient, "orthonormalize: rank deficient");
  }

  Mat q = qr.householderQ() * Mat::Identity(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (diag(j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Vec least_squares(const Mat& c, const Vec& b, const LinalgTolerances& tol) {
  const auto m = c.rows();
  const auto d = c.cols();
  if (m < 1 || d < 1 || b.size() != m) {
    throw Error(ErrorKind::shape, "least_squares: shape mismatch");
  }
  if (m < d) {
    throw Error(ErrorKind::singular_normal_equations,
                "least_squares: singular normal equations (fewer rows than columns)");
  }
  require_finite(c, "least_squares");
  require_finite(b, "least_squares");

  Eigen::HouseholderQR<Mat> qr(c);
  const auto r = qr.matrixQR().topLeftCorner(d, d).triangularView<Eigen::Upper>();
  const Vec diag = qr.matrixQR().diagonal().head(d).cwiseAbs();
  const double largest = diag.maxCoeff();
  if (!(largest > 0.0) || diag.minCoeff() <= tol.normal_equations_ratio * largest) {
    throw Error(ErrorKind::singular_normal_equations, "least_squares: singular normal equations");
  }
  Vec qtb = qr.householderQ().transpose() * b;
  return r.solve(qtb.head(d));
}

Vec singular_values(const Mat& a) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw Error(ErrorKind::shape, "singular_values: empty matrix");
  }
  require_finite(a, "singular_values");
  // JacobiSVD returns values sorted in decreasing order.
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues();
}

Mat nearest_orthogonal(const Mat& a, const LinalgTolerances& tol) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw Error(ErrorKind::shape, "nearest_orthogonal: matrix must be square");
  }
  require_finite(a, "nearest_orthogonal");
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(s.size() - 1) <= tol.alignment_ratio * s(0)) {
    throw Error(ErrorKind::singular_alignment, "nearest_orthogonal: singular alignment");
  }
  return svd.matrixU() * svd.matrixV().transpose();
}

Vec sym_eigenvalues(const Mat& g, const LinalgTolerances& tol) {
  if (g.rows() != g.cols() || g.rows() < 1) {
    throw Error(ErrorKind::shape, "sym_eigenvalues: matrix must be square");
  }
  require_finite(g, "sym_eigenvalues");
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > tol.symmetry * scale) {
    throw Error(ErrorKind::not_symmetric, "sym_eigenvalues: not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(g, Eigen::EigenvaluesOnly);
  // Eigen sorts ascending.
  return eig.eigenvalues().reverse();
}

double orthonormality_drift(const Mat& a) {
  return (a.transpose() * a - Mat::Identity(a.cols(), a.cols())).norm();
}

}  // namespace grouse
