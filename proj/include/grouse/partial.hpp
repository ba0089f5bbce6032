#pragma once

// GROUSE for partially observed vectors: one gated rank-one rotation of the
// basis per observation, and a sequential driver over a stream.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "grouse/metrics.hpp"
#include "grouse/trial.hpp"

namespace grouse {

/// Entries of one vector v observed on the index set omega.
/// Indices are 0-based and strictly increasing; the CSV format stores them
/// 1-based.
struct Observation {
  std::vector<std::size_t> omega;
  Vec values;
  std::optional<Vec> latent_s;  // coefficients s with v = Ū s, synthetic data only

  /// Throws unless omega is strictly increasing within [0, n) and matches values.
  void validate(Eigen::Index n) const;
};

struct GateVerdict {
  bool passed = false;
  double eigen_min = 0.0;
  double eigen_max = 0.0;
  double lower_bound = 0.0;  // 0.5 |Ω| / n
  double upper_bound = 0.0;  // 1.5 |Ω| / n
};

struct StepRecord {
  GateVerdict gate;
  Vec w;
  Vec p;
  Vec r;  // zero outside Ω
  double sigma = 0.0;
  double eta = 0.0;
  double alpha = 1.0;
  bool taken = false;
  bool clamped = false;  // α‖r‖/‖p‖ exceeded 1 and the arcsine argument was clamped
  std::optional<double> epsilon_before;
  std::optional<double> epsilon_after;
  std::optional<double> theta;
};

struct PartialResidual {
  Vec w;
  Vec p;
  Vec r;
};

struct StepSize {
  double eta = 0.0;
  double angle = 0.0;  // σ η
  bool clamped = false;
};

struct StepOptions {
  double alpha = 1.0;
  /// Take every step regardless of the eigenvalue gate. Samples whose
  /// least-squares problem is singular are still skipped.
  bool bypass_gate = false;
};

struct StreamOptions {
  StepOptions step;
  std::size_t reortho_every = 100;
  std::size_t drift_check_every = 10;
};

struct StepOutcome {
  Basis basis;
  StepRecord record;
};

/// Residual norms below this fraction of ‖[v]_Ω‖ count as zero.
inline constexpr double kZeroResidualRatio = 1e-14;

/// Extreme eigenvalues of [U]_Ωᵀ[U]_Ω against [0.5|Ω|/n, 1.5|Ω|/n].
GateVerdict gate_check(const Basis& u, std::span<const std::size_t> omega);

PartialResidual partial_residual(const Basis& u, const Observation& obs);

/// η with sin(ση) = α‖r‖/‖p‖; the argument is clamped to 1.
StepSize step_size(double sigma, double norm_r, double norm_p, double alpha);

/// U + [(cos ση − 1) p/‖p‖ + sin ση r/‖r‖] wᵀ/‖w‖.
Basis apply_update(const Basis& u, const StepRecord& rec);

StepOutcome grouse_step(const Basis& u, const Observation& obs, const StepOptions& options = {},
                        const std::optional<Basis>& ubar = std::nullopt);

TrialResult run_stream(const Basis& u0, std::span<const Observation> stream,
                       const StreamOptions& options = {},
                       const std::optional<Basis>& ubar = std::nullopt);

/// Observation CSV: `t,n,indices,values` with semicolon-separated 1-based
/// indices and decimal values. A header line is optional on input.
std::vector<Observation> read_observations(const std::string& path, Eigen::Index* n_out = nullptr);
void write_observations(const std::string& path, std::span<const Observation> stream,
                        Eigen::Index n);

}  // namespace grouse
