#include "grouse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grouse/kernels.hpp"

namespace grouse {

Basis::Basis(Mat columns, NoCheck) : m_(std::move(columns)) {
  if (m_.cols() < 1 || m_.rows() <= m_.cols()) {
    throw Error(ErrorKind::shape, "Basis: requires 0 < d < n");
  }
  require_finite(m_, "Basis");
}

Basis::Basis(Mat columns) : Basis(std::move(columns), NoCheck{}) {
  const double drift = orthonormality_drift(m_);
  if (drift > kDriftBudget) {
    throw Error(ErrorKind::invalid_argument,
                "Basis: columns are not orthonormal (drift " + std::to_string(drift) + ")");
  }
}

Basis Basis::orthonormalized(const Mat& a) { return Basis(orthonormalize(a), NoCheck{}); }

Basis Basis::unchecked(Mat columns) { return Basis(std::move(columns), NoCheck{}); }

void require_same_shape(const Basis& a, const Basis& b, const char* what) {
  if (a.n() != b.n() || a.d() != b.d()) {
    throw Error(ErrorKind::shape, std::string(what) + ": basis shapes differ");
  }
}

Vec principal_angles(const Basis& u, const Basis& ubar) {
  require_same_shape(u, ubar, "principal_angles");
  const Vec sigma = singular_values(kernels::cross_gram(ubar.mat(), u.mat()));
  Vec angles(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    angles(i) = std::acos(std::clamp(sigma(i), 0.0, 1.0));
  }
  return angles;
}

double epsilon(const Basis& u, const Basis& ubar) {
  require_same_shape(u, ubar, "epsilon");
  if (u.mat() == ubar.mat()) return 0.0;
  const Mat a = kernels::cross_gram(ubar.mat(), u.mat());
  const double d = static_cast<double>(u.d());
  double eps = d - a.squaredNorm();
  if (eps < kEpsilonResidualSwitch * d) {
    eps = kernels::residual_frobenius_sq(u.mat(), ubar.mat(), a);
  }
  return std::clamp(eps, 0.0, d);
}

double coherence_basis(const Basis& u) {
  const double max_row = u.mat().rowwise().squaredNorm().maxCoeff();
  return static_cast<double>(u.n()) / static_cast<double>(u.d()) * max_row;
}

double coherence_vector(const Vec& x) {
  const double norm_sq = x.squaredNorm();
  if (!(norm_sq > 0.0)) throw Error(ErrorKind::undefined_coherence, "undefined coherence: zero vector");
  const double inf = x.cwiseAbs().maxCoeff();
  return static_cast<double>(x.size()) * inf * inf / norm_sq;
}

double revealed_angle_sin_sq(const Basis& u, const Vec& v) {
  if (v.size() != u.n()) throw Error(ErrorKind::shape, "revealed_angle_sin_sq: dimension mismatch");
  const double norm_sq = v.squaredNorm();
  if (!(norm_sq > 0.0)) throw Error(ErrorKind::invalid_argument, "revealed_angle_sin_sq: zero vector");
  const Vec residual = v - u.mat() * (u.mat().transpose() * v);
  return std::clamp(residual.squaredNorm() / norm_sq, 0.0, 1.0);
}

Mat alignment(const Basis& u, const Basis& ubar) {
  require_same_shape(u, ubar, "alignment");
  try {
    return nearest_orthogonal(kernels::cross_gram(ubar.mat(), u.mat()));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::singular_alignment) {
      throw Error(ErrorKind::singular_alignment, "alignment: subspaces share no aligned frame");
    }
    throw;
  }
}

SubspaceDiagnostics diagnose(const Basis& u, const Basis& ubar, const std::optional<Vec>& v) {
  SubspaceDiagnostics out;
  out.principal_angles = principal_angles(u, ubar);
  out.epsilon = epsilon(u, ubar);
  if (v) out.cos_sq_theta = 1.0 - revealed_angle_sin_sq(u, *v);
  out.coherence_current = coherence_basis(u);
  out.coherence_target = coherence_basis(ubar);
  return out;
}

}  // namespace grouse
