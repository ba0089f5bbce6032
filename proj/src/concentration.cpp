#include "grouse/concentration.hpp"

#include <algorithm>
#include <cmath>

#include "grouse/csv.hpp"
#include "grouse/partial.hpp"
#include "grouse/random.hpp"

namespace grouse {
namespace {

Mat sampled_rows(const Mat& m, std::span<const std::size_t> omega) {
  Mat out(static_cast<Eigen::Index>(omega.size()), m.cols());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(omega[i]));
  }
  return out;
}

MeanEstimate summarize(const std::vector<double>& samples) {
  MeanEstimate est;
  est.samples = samples.size();
  if (samples.empty()) return est;
  double sum = 0.0;
  for (double x : samples) sum += x;
  est.mean = sum / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double x : samples) ss += (x - est.mean) * (x - est.mean);
    const double var = ss / static_cast<double>(samples.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(samples.size()));
  }
  return est;
}

void require_probability(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "delta must lie in (0, 1)");
  }
}

}  // namespace

Quantiles quantiles(std::vector<double> values) {
  Quantiles q;
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  auto at = [&values](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  q.q05 = at(0.05);
  q.q50 = at(0.50);
  q.q95 = at(0.95);
  return q;
}

std::vector<std::size_t> sample_with_replacement(std::size_t n, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  return rng.sample_with_replacement(n, m);
}

double gamma_bound(std::size_t d, double mu, std::size_t omega_size, double delta) {
  require_probability(delta);
  if (d == 0 || omega_size == 0 || !(mu > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "gamma_bound: arguments must be positive");
  }
  const double dd = static_cast<double>(d);
  return std::sqrt(8.0 * dd * mu / (3.0 * static_cast<double>(omega_size)) *
                   std::log(2.0 * dd / delta));
}

double concentration_hypothesis_size(std::size_t d, double mu, double delta) {
  require_probability(delta);
  const double dd = static_cast<double>(d);
  return 8.0 / 3.0 * dd * mu * std::log(2.0 * dd / delta);
}

std::size_t minimal_hypothesis_size(std::size_t d, double mu, double delta) {
  return static_cast<std::size_t>(std::floor(concentration_hypothesis_size(d, mu, delta))) + 1;
}

double skip_corollary_sample_size(std::size_t n, std::size_t d, double mu, double c1) {
  const double log_n = std::log(static_cast<double>(n));
  const double dd = static_cast<double>(d);
  return c1 * log_n * log_n * dd * mu * std::log(20.0 * dd);
}

GramTrial gram_trial(const Basis& u, std::span<const std::size_t> omega, double gamma) {
  GramTrial out;
  if (omega.empty()) return out;
  const Vec sv = singular_values(sampled_rows(u.mat(), omega));
  out.eig_max = sv(0) * sv(0);
  out.eig_min = static_cast<Eigen::Index>(omega.size()) < u.d()
                    ? 0.0
                    : sv(sv.size() - 1) * sv(sv.size() - 1);
  const double scale = static_cast<double>(omega.size()) / static_cast<double>(u.n());
  out.in_window = out.eig_min >= (1.0 - gamma) * scale && out.eig_max <= (1.0 + gamma) * scale;
  return out;
}

ConcentrationReport validate_gram_concentration(const Basis& u, std::size_t omega_size,
                                                double delta, std::size_t trials,
                                                std::uint64_t seed, Execution exec) {
  ConcentrationReport report;
  report.trials = trials;
  report.delta = delta;
  report.omega_size = omega_size;
  report.coherence = coherence_basis(u);
  report.gamma = gamma_bound(static_cast<std::size_t>(u.d()), report.coherence, omega_size, delta);
  report.hypothesis_met = static_cast<double>(omega_size) >
                          concentration_hypothesis_size(static_cast<std::size_t>(u.d()),
                                                        report.coherence, delta);
  report.rows.resize(trials);

  const auto n = static_cast<std::size_t>(u.n());
  for_each_trial(trials, exec, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {i}));
    const auto omega = rng.sample_with_replacement(n, omega_size);
    report.rows[i] = gram_trial(u, omega, report.gamma);
  });

  std::size_t failures = 0;
  std::vector<double> mins, maxs;
  mins.reserve(trials);
  maxs.reserve(trials);
  for (const auto& row : report.rows) {
    if (!row.in_window) ++failures;
    mins.push_back(row.eig_min);
    maxs.push_back(row.eig_max);
  }
  report.failure_rate = trials ? static_cast<double>(failures) / static_cast<double>(trials) : 0.0;
  report.eigen_min_quantiles = quantiles(std::move(mins));
  report.eigen_max_quantiles = quantiles(std::move(maxs));
  return report;
}

ResidualTrial residual_bound_trial(const Basis& u, const Basis& ubar,
                                   std::span<const std::size_t> omega, const Vec& s, double delta) {
  require_same_shape(u, ubar, "residual_bound_trial");
  require_probability(delta);
  ResidualTrial out;
  const Vec v = ubar.mat() * s;
  const Vec x = u.mat() == ubar.mat() ? Vec::Zero(v.size()) : Vec(v - u.mat() * (u.mat().transpose() * v));
  const double x_sq = x.squaredNorm();

  const Mat c = sampled_rows(u.mat(), omega);
  Vec b(static_cast<Eigen::Index>(omega.size()));
  for (std::size_t i = 0; i < omega.size(); ++i) {
    b(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(omega[i]));
  }
  Vec w;
  try {
    w = least_squares(c, b);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::singular_normal_equations) return out;
    throw;
  }
  out.lhs = (b - c * w).squaredNorm();

  const double n = static_cast<double>(u.n());
  const double d = static_cast<double>(u.d());
  const double size = static_cast<double>(omega.size());
  const double mu_u = coherence_basis(u);
  const double log_inv = std::log(1.0 / delta);
  out.gamma = gamma_bound(static_cast<std::size_t>(u.d()), mu_u, omega.size(), delta);
  if (!(x_sq > 0.0)) return out;  // v ∈ range(U): both sides vanish

  const double mu_x = coherence_vector(x);
  out.xi = std::sqrt(2.0 * mu_x * mu_x / size * log_inv);
  out.beta = std::sqrt(2.0 * mu_x * log_inv);
  // With γ ≥ 1 the sampled Gram matrix may be singular and the bound is void.
  if (out.gamma >= 1.0) return out;
  const double factor =
      (size * (1.0 - out.xi) - d * mu_u * (1.0 + out.beta) * (1.0 + out.beta) / (1.0 - out.gamma)) / n;
  out.asserted = factor > 0.0;
  out.rhs = out.asserted ? factor * x_sq : 0.0;
  out.violated = out.asserted && out.lhs < out.rhs * (1.0 - 1e-12);
  return out;
}

ResidualBoundReport validate_residual_bound(const Basis& u, const Basis& ubar,
                                            std::size_t omega_size, double delta,
                                            std::size_t trials, std::uint64_t seed,
                                            Execution exec) {
  require_same_shape(u, ubar, "validate_residual_bound");
  ResidualBoundReport report;
  report.trials = trials;
  report.hypothesis_met =
      static_cast<double>(omega_size) >
      concentration_hypothesis_size(static_cast<std::size_t>(u.d()), coherence_basis(u), delta);
  report.rows.resize(trials);

  const auto n = static_cast<std::size_t>(u.n());
  for_each_trial(trials, exec, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {i}));
    const Vec s = rng.gaussian_vec(ubar.d());
    const auto omega = rng.sample_with_replacement(n, omega_size);
    report.rows[i] = residual_bound_trial(u, ubar, omega, s, delta);
  });

  std::size_t violations = 0;
  std::vector<double> xis, betas, rhss;
  for (const auto& row : report.rows) {
    if (row.asserted) ++report.asserted_trials;
    if (row.violated) ++violations;
    xis.push_back(row.xi);
    betas.push_back(row.beta);
    rhss.push_back(row.rhs);
  }
  report.violation_rate = trials ? static_cast<double>(violations) / static_cast<double>(trials) : 0.0;
  report.xi = quantiles(std::move(xis)).q50;
  report.beta = quantiles(std::move(betas)).q50;
  report.bound_rhs = quantiles(std::move(rhss)).q50;
  return report;
}

double estimate_skip_rate(const Basis& u, std::size_t q, std::size_t trials, std::uint64_t seed,
                          Execution exec) {
  if (q < static_cast<std::size_t>(u.d()) || q > static_cast<std::size_t>(u.n())) {
    throw Error(ErrorKind::invalid_argument, "estimate_skip_rate: requires d <= q <= n");
  }
  std::vector<char> failed(trials, 0);
  const auto n = static_cast<std::size_t>(u.n());
  for_each_trial(trials, exec, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {i}));
    const auto omega = rng.sample_without_replacement(n, q);
    failed[i] = gate_check(u, omega).passed ? 0 : 1;
  });
  std::size_t count = 0;
  for (char f : failed) count += static_cast<std::size_t>(f);
  return trials ? static_cast<double>(count) / static_cast<double>(trials) : 0.0;
}

MeanEstimate validate_sin_sq_expectation(const Basis& u, const Basis& ubar, std::size_t trials,
                                         std::uint64_t seed, Execution exec) {
  require_same_shape(u, ubar, "validate_sin_sq_expectation");
  std::vector<double> samples(trials, 0.0);
  if (u.mat() == ubar.mat()) return summarize(samples);
  for_each_trial(trials, exec, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {i}));
    const Vec v = ubar.mat() * rng.gaussian_vec(ubar.d());
    samples[i] = revealed_angle_sin_sq(u, v);
  });
  return summarize(samples);
}

MuXtSummary mu_xt_diagnostics(const Basis& u, const Basis& ubar, std::size_t trials,
                              std::uint64_t seed, double c1, Execution exec) {
  require_same_shape(u, ubar, "mu_xt_diagnostics");
  MuXtSummary out;
  out.trials = trials;
  const double log_n = std::log(static_cast<double>(u.n()));
  const double d = static_cast<double>(u.d());
  const double log20d = std::log(20.0 * d);
  out.threshold_a = log_n * std::sqrt(0.045 / std::log(10.0) * c1 * d * coherence_basis(ubar) * log20d);
  out.threshold_b = log_n * log_n * (0.05 / (8.0 * std::log(10.0)) * c1 * log20d);

  std::vector<double> samples(trials);
  for_each_trial(trials, exec, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {i}));
    const Vec v = ubar.mat() * rng.gaussian_vec(ubar.d());
    const Vec x = v - u.mat() * (u.mat().transpose() * v);
    samples[i] = coherence_vector(x);
  });
  std::size_t ok = 0;
  for (double m : samples) {
    if (m <= out.threshold_a && m <= out.threshold_b) ++ok;
  }
  out.satisfied_fraction = trials ? static_cast<double>(ok) / static_cast<double>(trials) : 0.0;
  out.mu = quantiles(std::move(samples));
  return out;
}

MeanEstimate coordinate_share_expectation(std::size_t d, std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> samples(trials);
  for (auto& sample : samples) {
    const Vec w = rng.gaussian_vec(static_cast<Eigen::Index>(d));
    sample = w(0) * w(0) / w.squaredNorm();
  }
  return summarize(samples);
}

MeanEstimate rayleigh_expectation(const Mat& q, std::size_t trials, std::uint64_t seed) {
  if (q.rows() != q.cols()) throw Error(ErrorKind::shape, "rayleigh_expectation: Q must be square");
  Rng rng(seed);
  std::vector<double> samples(trials);
  for (auto& sample : samples) {
    const Vec w = rng.gaussian_vec(q.rows());
    sample = w.dot(q * w) / w.squaredNorm();
  }
  return summarize(samples);
}

void write_concentration_csv(const std::string& path, const ConcentrationReport& report) {
  csv::Table table;
  table.header = {"trial", "eig_min", "eig_max", "in_window"};
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    table.rows.push_back({std::to_string(i + 1), csv::format_double(r.eig_min),
                          csv::format_double(r.eig_max), r.in_window ? "1" : "0"});
  }
  csv::write(path, table);
}

void write_residual_csv(const std::string& path, const ResidualBoundReport& report) {
  csv::Table table;
  table.header = {"trial", "lhs", "rhs", "violated"};
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    table.rows.push_back({std::to_string(i + 1), csv::format_double(r.lhs),
                          csv::format_double(r.rhs), r.violated ? "1" : "0"});
  }
  csv::write(path, table);
}

}  // namespace grouse
