#include "grouse/full.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "grouse/kernels.hpp"
#include "grouse/random.hpp"

namespace grouse {
namespace {

struct FullUpdate {
  Vec w;
  Vec p;
  Vec r;
  double sigma = 0.0;
  double theta = 0.0;
  double eta = 0.0;
  bool updated = false;
};

FullUpdate compute_update(const Basis& u, const Vec& v) {
  if (v.size() != u.n()) throw Error(ErrorKind::shape, "full_step: dimension mismatch");
  if (!(v.squaredNorm() > 0.0)) throw Error(ErrorKind::invalid_argument, "full_step: zero sample");
  FullUpdate up;
  up.w = u.mat().transpose() * v;
  up.p = u.mat() * up.w;
  up.r = v - up.p;
  const double norm_r = up.r.norm();
  const double norm_w = up.w.norm();
  // atan2 stays accurate near θ = 0, where arccos(‖w‖/‖v‖) does not.
  up.theta = std::atan2(norm_r, norm_w);
  up.sigma = norm_r * up.p.norm();
  up.updated = up.theta >= kThetaEdge && up.theta <= std::numbers::pi / 2 - kThetaEdge;
  if (up.updated) up.eta = up.theta / up.sigma;
  return up;
}

Basis rotate(const Basis& u, const FullUpdate& up) {
  // ση = θ exactly for this step length.
  const Vec left = ((std::cos(up.theta) - 1.0) / up.p.norm()) * up.p +
                   (std::sin(up.theta) / up.r.norm()) * up.r;
  Mat next = u.mat();
  kernels::rank_one_update(next, left, up.w / up.w.norm());
  return Basis::unchecked(std::move(next));
}

}  // namespace

double predicted_decrease(const Basis& u, const Basis& ubar, const Vec& v, double eta) {
  require_same_shape(u, ubar, "predicted_decrease");
  if (v.size() != u.n()) throw Error(ErrorKind::shape, "predicted_decrease: dimension mismatch");
  const Vec w = u.mat().transpose() * v;
  const Vec p = u.mat() * w;
  const double norm_r = (v - p).norm();
  const double norm_w = w.norm();
  if (!(norm_r > 0.0) || !(norm_w > 0.0)) return 0.0;

  const double theta = std::atan2(norm_r, norm_w);
  if (theta < kThetaEdge || theta > std::numbers::pi / 2 - kThetaEdge) return 0.0;
  const double sigma = norm_r * p.norm();
  const double angle = sigma * eta;
  const double sin_theta = std::sin(theta);
  const double factor = std::sin(angle) * std::sin(2.0 * theta - angle) / (sin_theta * sin_theta);

  // wᵀ(I − AAᵀ)w = ‖(I − ŪŪᵀ)U w‖² when UᵀU = I. The residual form keeps its
  // relative accuracy when the bracket is tiny.
  const Vec outside = p - ubar.mat() * (ubar.mat().transpose() * p);
  return factor * outside.squaredNorm() / (norm_w * norm_w);
}

FullStepOutcome full_step(const Basis& u, const Vec& v, const Basis& ubar) {
  require_same_shape(u, ubar, "full_step");
  FullUpdate up = compute_update(u, v);

  FullStepRecord rec;
  rec.epsilon_before = epsilon(u, ubar);
  rec.sigma = up.sigma;
  rec.theta = up.theta;
  rec.eta = up.eta;
  rec.updated = up.updated;

  Basis next = up.updated ? rotate(u, up) : u;
  rec.predicted_decrease = up.updated ? predicted_decrease(u, ubar, v, up.eta) : 0.0;
  rec.epsilon_after = up.updated ? epsilon(next, ubar) : rec.epsilon_before;
  rec.w = std::move(up.w);
  rec.p = std::move(up.p);
  rec.r = std::move(up.r);
  return FullStepOutcome{std::move(next), std::move(rec)};
}

TrialResult run_full(const Basis& u0, const Basis& ubar, std::size_t iters, std::uint64_t seed,
                     const FullRunOptions& options) {
  require_same_shape(u0, ubar, "run_full");
  const auto start = std::chrono::steady_clock::now();
  Rng rng(seed);
  TrialResult result;
  result.epsilons.reserve(iters + 1);
  result.steps.reserve(iters);
  result.epsilons.push_back(epsilon(u0, ubar));

  Basis u = u0;
  std::size_t since_reortho = 0;
  for (std::size_t t = 0; t < iters; ++t) {
    const Vec v = ubar.mat() * rng.gaussian_vec(ubar.d());
    const FullUpdate up = compute_update(u, v);

    StepSummary summary;
    summary.gate_passed = true;
    summary.taken = up.updated;
    summary.norm_r = up.r.norm();
    summary.norm_p = up.p.norm();
    summary.theta = up.theta;

    if (up.updated) {
      u = rotate(u, up);
      ++since_reortho;
      const bool due = options.reortho_every > 0 && since_reortho >= options.reortho_every;
      const bool check =
          options.drift_check_every > 0 && since_reortho % options.drift_check_every == 0;
      if (due || (check && u.drift() > Basis::kDriftBudget)) {
        u = Basis::orthonormalized(u.mat());
        since_reortho = 0;
        ++result.reorthonormalizations;
      }
    }
    result.epsilons.push_back(epsilon(u, ubar));
    result.steps.push_back(summary);
  }
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace grouse
