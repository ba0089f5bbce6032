#pragma once

// Problem generation, trial orchestration, convergence-factor fitting and
// phase-transition sweeps.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grouse/full.hpp"
#include "grouse/parallel.hpp"
#include "grouse/partial.hpp"

namespace grouse {

struct ProblemSpec {
  std::size_t n = 0;
  std::size_t d = 0;
  std::optional<std::size_t> q;  // empty: every entry observed
  double alpha = 1.0;
  std::size_t iters = 500;
  std::uint64_t seed = 0;
  double init_noise_std = 0.5;

  /// Throws Error(invalid_argument) naming the first violated constraint.
  void validate() const;
};

struct Problem {
  Basis ubar;
  Basis u0;
};

struct PartialTrialOptions {
  bool bypass_gate = false;
  std::size_t reortho_every = 100;
};

/// Ū = orth(T), U₀ = orth(T + E) with T ~ N(0,1) and E ~ N(0, init_noise_std²).
Problem generate_problem(const ProblemSpec& spec);

/// A basis whose principal angles to `ubar` are exactly `angles`, presented in
/// a random frame. Requires n ≥ 2d and angles in [0, π/2].
Basis basis_at_angles(const Basis& ubar, const Vec& angles, std::uint64_t seed);

/// A basis at distance ε from `ubar`, with the ε budget split unevenly over
/// the principal angles.
Basis basis_at_epsilon(const Basis& ubar, double eps, std::uint64_t seed);

/// The observation stream of a partial trial: fresh s_t ~ N(0, I_d) and fresh
/// Ω_t of size q drawn without replacement.
std::vector<Observation> synthesize_stream(const ProblemSpec& spec, const Basis& ubar);

/// X solving ε_N = ε₀ (1 − X q/(nd))^N.
double fit_x(double epsilon0, double epsilon_n, std::size_t n, std::size_t d, std::size_t q,
             std::size_t iters);

/// Least-squares slope of log ε_t over the last half of the resolved prefix,
/// which ends just before the first ε_t below `floor`.
inline constexpr double kTailFloor = 1e-24;
std::optional<double> tail_slope(const std::vector<double>& epsilons, double floor = kTailFloor);

/// Full-data updates stop once θ drops under kThetaEdge, i.e. near ε ≈ d·kThetaEdge².
double full_resolution_floor(std::size_t d);

TrialResult run_partial_trial(const ProblemSpec& spec, const PartialTrialOptions& options = {});
TrialResult run_full_trial(const ProblemSpec& spec);

/// ⌈d log d log n⌉, clamped to [d, n].
std::size_t q_experiment_preset(std::size_t n, std::size_t d);
/// ⌈d log d (log n)²⌉, clamped to [d, n].
std::size_t q_theory_preset(std::size_t n, std::size_t d);

struct SweepGrid {
  std::vector<std::size_t> ns;
  std::vector<std::size_t> ds;
  std::vector<std::size_t> qs;
};

struct SweepCell {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t q = 0;
  std::size_t trials = 0;
  bool feasible = false;
  double mean_x = 0.0;
  double std_x = 0.0;
  std::vector<double> xs;
};

struct SweepOptions {
  std::size_t trials_per_cell = 10;
  std::size_t iters = 500;
  std::uint64_t seed = 0;
  double alpha = 1.0;
  double init_noise_std = 0.5;
  bool bypass_gate = false;
  Execution exec = Execution::parallel;
};

/// Mean X over seeded trials for every (n, d, q) cell, in n-major order.
/// Cells violating d < n or d ≤ q ≤ n are returned with feasible = false.
std::vector<SweepCell> sweep_phase(const SweepGrid& grid, const SweepOptions& options);

/// Flat `key = value` text with exactly the ProblemSpec field names.
ProblemSpec read_problem_spec(const std::string& path);
void write_problem_spec(const std::string& path, const ProblemSpec& spec);

/// Header t,epsilon,gate_passed,norm_r,norm_p,theta. Row 0 holds ε₀ and
/// `nan` for the per-step fields.
void write_trajectory_csv(const std::string& path, const TrialResult& result);
/// Header n,d,q,trials,mean_X,std_X; infeasible cells carry `nan`.
void write_sweep_csv(const std::string& path, const std::vector<SweepCell>& cells);

}  // namespace grouse
