#pragma once

// Distances and regularity measures between subspaces of R^n, each represented
// by an orthonormal basis.

#include <optional>

#include "grouse/linalg.hpp"

namespace grouse {

/// n×d matrix with orthonormal columns, 0 < d < n: a point on the Grassmannian.
class Basis {
 public:
  /// Largest ‖BᵀB − I‖_F a Basis may carry.
  static constexpr double kDriftBudget = 1e-8;

  /// Validates shape, finiteness and orthonormality.
  explicit Basis(Mat columns);

  /// Orthonormalizes `a` first; fails on rank deficiency.
  static Basis orthonormalized(const Mat& a);

  /// Shape and finiteness checks only. Used by the updates, whose result is
  /// orthonormal in exact arithmetic and whose drift the caller monitors.
  static Basis unchecked(Mat columns);

  Eigen::Index n() const { return m_.rows(); }
  Eigen::Index d() const { return m_.cols(); }
  const Mat& mat() const { return m_; }
  double drift() const { return orthonormality_drift(m_); }

 private:
  struct NoCheck {};
  Basis(Mat columns, NoCheck);
  Mat m_;
};

struct SubspaceDiagnostics {
  Vec principal_angles;               // ascending, radians
  double epsilon = 0.0;
  std::optional<double> cos_sq_theta;  // present when a sample vector is given
  double coherence_current = 0.0;
  double coherence_target = 0.0;
};

/// φ_i = arccos(σ_i(ŪᵀU)), ascending.
Vec principal_angles(const Basis& u, const Basis& ubar);

/// ε = Σ sin²φ_i = d − ‖ŪᵀU‖²_F.
///
/// Below kEpsilonResidualSwitch·d the difference d − ‖ŪᵀU‖²_F loses all of its
/// significant digits, so ε is then taken as ‖U − ŪŪᵀU‖²_F, which is the same
/// quantity for orthonormal U but is computed from the small residual itself.
double epsilon(const Basis& u, const Basis& ubar);
inline constexpr double kEpsilonResidualSwitch = 1e-4;

/// μ(U) = (n/d) max_i ‖U_i·‖².
double coherence_basis(const Basis& u);

/// μ(x) = n ‖x‖²_∞ / ‖x‖².
double coherence_vector(const Vec& x);

/// sin²θ for the angle θ between v and range(U): ‖v − UUᵀv‖² / ‖v‖².
double revealed_angle_sin_sq(const Basis& u, const Vec& v);

/// Orthogonal V closest to ŪᵀU. Satisfies ε ≤ ‖ŪV − U‖²_F ≤ 2ε when n ≥ 2d.
Mat alignment(const Basis& u, const Basis& ubar);

SubspaceDiagnostics diagnose(const Basis& u, const Basis& ubar,
                             const std::optional<Vec>& v = std::nullopt);

void require_same_shape(const Basis& a, const Basis& b, const char* what);

}  // namespace grouse
