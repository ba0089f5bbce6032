#pragma once

// Monte-Carlo checks of the probabilistic statements behind the convergence
// analysis: eigenvalue concentration of sampled Gram matrices, the residual
// lower bound, the eigenvalue-gate skip probability and E[sin²θ] = ε/d.
//
// Index samples are 0-based. Concentration and residual checks draw Ω uniformly WITH
// replacement; the skip-rate estimate draws WITHOUT replacement, like the
// algorithm does.

#include <cstdint>
#include <span>
#include <vector>

#include "grouse/metrics.hpp"
#include "grouse/parallel.hpp"

namespace grouse {

struct Quantiles {
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
};

Quantiles quantiles(std::vector<double> values);

struct GramTrial {
  double eig_min = 0.0;
  double eig_max = 0.0;
  bool in_window = false;
};

struct ConcentrationReport {
  std::size_t trials = 0;
  double delta = 0.0;
  double gamma = 0.0;
  std::size_t omega_size = 0;
  double coherence = 0.0;
  bool hypothesis_met = false;
  double failure_rate = 0.0;
  Quantiles eigen_min_quantiles;
  Quantiles eigen_max_quantiles;
  std::vector<GramTrial> rows;
};

struct ResidualTrial {
  double lhs = 0.0;
  double rhs = 0.0;
  double xi = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  bool asserted = false;  // the bracketed factor was positive
  bool violated = false;
};

struct ResidualBoundReport {
  std::size_t trials = 0;
  std::size_t asserted_trials = 0;
  bool hypothesis_met = false;
  double xi = 0.0;         // medians over trials
  double beta = 0.0;
  double bound_rhs = 0.0;
  double violation_rate = 0.0;
  std::vector<ResidualTrial> rows;
};

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

struct MuXtSummary {
  Quantiles mu;
  double threshold_a = 0.0;  // log n [.045/log 10 · C₁ d μ(Ū) log 20d]^{1/2}
  double threshold_b = 0.0;  // (log n)² [.05/(8 log 10) · C₁ log 20d]
  double satisfied_fraction = 0.0;
  std::size_t trials = 0;
};

std::vector<std::size_t> sample_with_replacement(std::size_t n, std::size_t m, std::uint64_t seed);

/// γ = sqrt((8 d μ / 3|Ω|) log(2d/δ)).
double gamma_bound(std::size_t d, double mu, std::size_t omega_size, double delta);

/// (8/3) d μ log(2d/δ): |Ω| must exceed this for the concentration theorem.
double concentration_hypothesis_size(std::size_t d, double mu, double delta);

/// Smallest integer |Ω| strictly above concentration_hypothesis_size.
std::size_t minimal_hypothesis_size(std::size_t d, double mu, double delta);

/// q = C₁ (log n)² d μ(Ū) log(20d): the sample size under which the gate
/// passes with probability ≥ 0.9 close to the solution.
double skip_corollary_sample_size(std::size_t n, std::size_t d, double mu, double c1);

GramTrial gram_trial(const Basis& u, std::span<const std::size_t> omega, double gamma);

ConcentrationReport validate_gram_concentration(const Basis& u, std::size_t omega_size,
                                                double delta, std::size_t trials,
                                                std::uint64_t seed,
                                                Execution exec = Execution::parallel);

ResidualTrial residual_bound_trial(const Basis& u, const Basis& ubar,
                                   std::span<const std::size_t> omega, const Vec& s, double delta);

ResidualBoundReport validate_residual_bound(const Basis& u, const Basis& ubar,
                                            std::size_t omega_size, double delta,
                                            std::size_t trials, std::uint64_t seed,
                                            Execution exec = Execution::parallel);

/// Fraction of Ω draws (|Ω| = q, without replacement) that fail the gate.
double estimate_skip_rate(const Basis& u, std::size_t q, std::size_t trials, std::uint64_t seed,
                          Execution exec = Execution::parallel);

/// Sample mean and standard error of sin²θ for v = Ū s, s ~ N(0, I).
MeanEstimate validate_sin_sq_expectation(const Basis& u, const Basis& ubar, std::size_t trials,
                                         std::uint64_t seed, Execution exec = Execution::parallel);

/// Distribution of μ(x_t), x_t = v − UUᵀv, against the two thresholds for a
/// given C₁. Diagnostic only.
MuXtSummary mu_xt_diagnostics(const Basis& u, const Basis& ubar, std::size_t trials,
                              std::uint64_t seed, double c1 = 64.0 / 3.0,
                              Execution exec = Execution::parallel);

/// E[w_1² / Σ w_j²] for w ~ N(0, I_d); equals 1/d.
MeanEstimate coordinate_share_expectation(std::size_t d, std::size_t trials, std::uint64_t seed);

/// E[wᵀQw / wᵀw] for w ~ N(0, I_d); equals trace(Q)/d.
MeanEstimate rayleigh_expectation(const Mat& q, std::size_t trials, std::uint64_t seed);

/// CSV with columns trial,eig_min,eig_max,in_window.
void write_concentration_csv(const std::string& path, const ConcentrationReport& report);
/// CSV with columns trial,lhs,rhs,violated.
void write_residual_csv(const std::string& path, const ResidualBoundReport& report);

}  // namespace grouse
