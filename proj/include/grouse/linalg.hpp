#pragma once

// Dense linear-algebra contracts shared by every other module. All functions
// are pure and deterministic; failures throw grouse::Error.

#include <Eigen/Dense>

#include "grouse/error.hpp"

namespace grouse {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct LinalgTolerances {
  /// Smallest |R_jj| / max|R_jj| accepted by orthonormalize.
  double rank_ratio = 1e-12;
  /// Smallest |R_jj| / max|R_jj| accepted by least_squares. A ratio below
  /// 1e-8 means cond(cᵀc) beyond 1e16, i.e. numerically singular.
  double normal_equations_ratio = 1e-8;
  /// Smallest singular value ratio accepted by nearest_orthogonal.
  double alignment_ratio = 1e-12;
  /// Max |g - gᵀ| relative to max(1, |g|) accepted by sym_eigenvalues.
  double symmetry = 1e-12;
};

inline constexpr LinalgTolerances kDefaultLinalgTolerances{};

/// Householder QR with the sign of each column fixed so that diag(R) > 0.
/// The result is therefore unique, and a nearly orthonormal input comes back
/// nearly unchanged.
Mat orthonormalize(const Mat& a, const LinalgTolerances& tol = kDefaultLinalgTolerances);

/// argmin_w ‖c w − b‖₂ through a QR factorization of c.
Vec least_squares(const Mat& c, const Vec& b,
                  const LinalgTolerances& tol = kDefaultLinalgTolerances);

/// Singular values in descending order, min(rows, cols) of them.
Vec singular_values(const Mat& a);

/// Orthogonal polar factor U Vᵀ of a = U Σ Vᵀ, the orthogonal matrix closest
/// to `a` in Frobenius norm.
Mat nearest_orthogonal(const Mat& a, const LinalgTolerances& tol = kDefaultLinalgTolerances);

/// Eigenvalues of a symmetric matrix, descending.
Vec sym_eigenvalues(const Mat& g, const LinalgTolerances& tol = kDefaultLinalgTolerances);

/// ‖aᵀa − I‖_F.
double orthonormality_drift(const Mat& a);

void require_finite(const Mat& a, const char* what);

}  // namespace grouse
