#pragma once

// GROUSE when every entry of each sample is revealed. The step length
// η = θ/σ turns the update into an exact rotation by the revealed angle θ,
// and the per-step decrease of ε has a closed form.

#include <cstdint>

#include "grouse/metrics.hpp"
#include "grouse/trial.hpp"

namespace grouse {

struct FullStepRecord {
  Vec w;
  Vec p;
  Vec r;
  double sigma = 0.0;
  double theta = 0.0;
  double eta = 0.0;
  double epsilon_before = 0.0;
  double epsilon_after = 0.0;
  double predicted_decrease = 0.0;
  bool updated = false;
};

struct FullStepOutcome {
  Basis basis;
  FullStepRecord record;
};

struct FullRunOptions {
  std::size_t reortho_every = 100;
  std::size_t drift_check_every = 10;
};

/// Angles within this distance of 0 or π/2 leave the basis unchanged.
inline constexpr double kThetaEdge = 1e-9;

FullStepOutcome full_step(const Basis& u, const Vec& v, const Basis& ubar);

/// ε_t − ε_{t+1} for a step of length eta along v:
///   sin(ση) sin(2θ − ση) / sin²θ · (1 − wᵀAAᵀw / wᵀw),  A = UᵀŪ.
double predicted_decrease(const Basis& u, const Basis& ubar, const Vec& v, double eta);

/// Streams v_t = Ū s_t with s_t i.i.d. standard normal drawn from `seed`.
TrialResult run_full(const Basis& u0, const Basis& ubar, std::size_t iters, std::uint64_t seed,
                     const FullRunOptions& options = {});

}  // namespace grouse
