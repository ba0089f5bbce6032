#include "grouse/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "grouse/csv.hpp"
#include "grouse/random.hpp"

namespace grouse {
namespace {

void fail(const std::string& message) { throw Error(ErrorKind::invalid_argument, message); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void ProblemSpec::validate() const {
  if (d < 1) fail("d must be ≥ 1");
  if (d >= n) fail("d must be < n");
  if (q) {
    if (*q < d) fail("q must be ≥ d");
    if (*q > n) fail("q must be ≤ n");
  }
  if (!(alpha > 0.0 && alpha < 2.0)) fail("alpha must lie in (0, 2)");
  if (iters < 1) fail("iters must be ≥ 1");
  if (!(init_noise_std >= 0.0) || !std::isfinite(init_noise_std)) {
    fail("init_noise_std must be finite and ≥ 0");
  }
}

Problem generate_problem(const ProblemSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, {0}));
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto d = static_cast<Eigen::Index>(spec.d);
  const Mat t = rng.gaussian_mat(n, d);
  const Mat e = rng.gaussian_mat(n, d, spec.init_noise_std);
  return Problem{Basis::orthonormalized(t), Basis::orthonormalized(t + e)};
}

Basis basis_at_angles(const Basis& ubar, const Vec& angles, std::uint64_t seed) {
  const Eigen::Index n = ubar.n();
  const Eigen::Index d = ubar.d();
  if (angles.size() != d) throw Error(ErrorKind::shape, "basis_at_angles: need d angles");
  if (n < 2 * d) throw Error(ErrorKind::shape, "basis_at_angles: requires n >= 2d");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(angles(i) >= 0.0 && angles(i) <= std::numbers::pi / 2)) {
      fail("basis_at_angles: angles must lie in [0, pi/2]");
    }
  }
  Rng rng(derive_seed(seed, {0xa9e1}));
  Mat g = rng.gaussian_mat(n, d);
  g -= ubar.mat() * (ubar.mat().transpose() * g);
  g -= ubar.mat() * (ubar.mat().transpose() * g);
  const Mat complement = orthonormalize(g);
  // Random frame for Ū's side as well, so the pairing of columns is generic.
  const Mat frame = orthonormalize(rng.gaussian_mat(d, d));
  const Mat rotate = orthonormalize(rng.gaussian_mat(d, d));
  const Mat ubar_f = ubar.mat() * frame;
  const Mat comp_f = complement;

  Mat u(n, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    u.col(i) = std::cos(angles(i)) * ubar_f.col(i) + std::sin(angles(i)) * comp_f.col(i);
  }
  return Basis::orthonormalized(u * rotate);
}

Basis basis_at_epsilon(const Basis& ubar, double eps, std::uint64_t seed) {
  const Eigen::Index d = ubar.d();
  if (!(eps >= 0.0 && eps <= static_cast<double>(d))) fail("basis_at_epsilon: eps must lie in [0, d]");
  Rng rng(derive_seed(seed, {0x5eed}));
  Vec weights(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double g = rng.gaussian();
    weights(i) = 0.25 + g * g;
  }
  weights /= weights.sum();
  if (eps * weights.maxCoeff() > 1.0) weights.setConstant(1.0 / static_cast<double>(d));
  Vec angles(d);
  for (Eigen::Index i = 0; i < d; ++i) angles(i) = std::asin(std::sqrt(std::min(1.0, eps * weights(i))));
  return basis_at_angles(ubar, angles, seed);
}

std::vector<Observation> synthesize_stream(const ProblemSpec& spec, const Basis& ubar) {
  spec.validate();
  const std::size_t q = spec.q.value_or(spec.n);
  Rng rng(derive_seed(spec.seed, {1}));
  std::vector<Observation> stream(spec.iters);
  for (auto& obs : stream) {
    obs.latent_s = rng.gaussian_vec(static_cast<Eigen::Index>(spec.d));
    obs.omega = rng.sample_without_replacement(spec.n, q);
    obs.values.resize(static_cast<Eigen::Index>(q));
    for (std::size_t i = 0; i < q; ++i) {
      obs.values(static_cast<Eigen::Index>(i)) =
          ubar.mat().row(static_cast<Eigen::Index>(obs.omega[i])).dot(*obs.latent_s);
    }
  }
  return stream;
}

double fit_x(double epsilon0, double epsilon_n, std::size_t n, std::size_t d, std::size_t q,
             std::size_t iters) {
  if (!(epsilon0 > 0.0) || !(epsilon_n > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "fit_x: epsilon values must be positive");
  }
  if (iters < 1 || q < 1) throw Error(ErrorKind::invalid_argument, "fit_x: iters and q must be >= 1");
  const double ratio = std::pow(epsilon_n / epsilon0, 1.0 / static_cast<double>(iters));
  return (1.0 - ratio) * static_cast<double>(n) * static_cast<double>(d) / static_cast<double>(q);
}

std::optional<double> tail_slope(const std::vector<double>& epsilons, double floor) {
  std::size_t resolved = 0;
  while (resolved < epsilons.size() && epsilons[resolved] >= floor) ++resolved;
  if (resolved < 3) return std::nullopt;
  const std::size_t last = resolved - 1;
  const std::size_t first = last - last / 2;
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t count = 0;
  for (std::size_t t = first; t <= last; ++t) {
    const double x = static_cast<double>(t);
    const double y = std::log(epsilons[t]);
    st += x;
    sy += y;
    stt += x * x;
    sty += x * y;
    ++count;
  }
  if (count < 2) return std::nullopt;
  const double m = static_cast<double>(count);
  const double denom = m * stt - st * st;
  if (!(denom > 0.0)) return std::nullopt;
  return (m * sty - st * sy) / denom;
}

TrialResult run_partial_trial(const ProblemSpec& spec, const PartialTrialOptions& options) {
  spec.validate();
  if (!spec.q) fail("run_partial_trial: q is required");
  const Problem problem = generate_problem(spec);
  const auto stream = synthesize_stream(spec, problem.ubar);
  StreamOptions stream_options;
  stream_options.step.alpha = spec.alpha;
  stream_options.step.bypass_gate = options.bypass_gate;
  stream_options.reortho_every = options.reortho_every;
  TrialResult result = run_stream(problem.u0, stream, stream_options, problem.ubar);
  const double e0 = result.epsilons.front();
  const double en = result.epsilons.back();
  if (e0 > 0.0 && en > 0.0) result.x_factor = fit_x(e0, en, spec.n, spec.d, *spec.q, spec.iters);
  return result;
}

double full_resolution_floor(std::size_t d) {
  return 100.0 * static_cast<double>(d) * kThetaEdge * kThetaEdge;
}

TrialResult run_full_trial(const ProblemSpec& spec) {
  spec.validate();
  const Problem problem = generate_problem(spec);
  TrialResult result = run_full(problem.u0, problem.ubar, spec.iters, derive_seed(spec.seed, {1}));
  const double e0 = result.epsilons.front();
  const double en = result.epsilons.back();
  if (e0 > 0.0 && en > 0.0) result.x_factor = fit_x(e0, en, spec.n, spec.d, spec.n, spec.iters);
  result.tail_slope = tail_slope(result.epsilons, full_resolution_floor(spec.d));
  return result;
}

namespace {
std::size_t clamp_q(double raw, std::size_t n, std::size_t d) {
  const auto q = static_cast<std::size_t>(std::ceil(std::max(raw, 0.0)));
  return std::clamp(q, d, n);
}
}  // namespace

std::size_t q_experiment_preset(std::size_t n, std::size_t d) {
  const double dd = static_cast<double>(d);
  return clamp_q(dd * std::log(dd) * std::log(static_cast<double>(n)), n, d);
}

std::size_t q_theory_preset(std::size_t n, std::size_t d) {
  const double dd = static_cast<double>(d);
  const double log_n = std::log(static_cast<double>(n));
  return clamp_q(dd * std::log(dd) * log_n * log_n, n, d);
}

std::vector<SweepCell> sweep_phase(const SweepGrid& grid, const SweepOptions& options) {
  std::vector<SweepCell> cells;
  for (std::size_t n : grid.ns) {
    for (std::size_t d : grid.ds) {
      for (std::size_t q : grid.qs) {
        SweepCell cell;
        cell.n = n;
        cell.d = d;
        cell.q = q;
        cell.trials = options.trials_per_cell;
        cell.feasible = d >= 1 && d < n && q >= d && q <= n;
        if (cell.feasible) cell.xs.assign(options.trials_per_cell, 0.0);
        cells.push_back(std::move(cell));
      }
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (!cells[c].feasible) continue;
    for (std::size_t k = 0; k < options.trials_per_cell; ++k) jobs.emplace_back(c, k);
  }

  for_each_trial(jobs.size(), options.exec, [&](std::size_t j) {
    auto [c, k] = jobs[j];
    SweepCell& cell = cells[c];
    ProblemSpec spec;
    spec.n = cell.n;
    spec.d = cell.d;
    spec.q = cell.q;
    spec.alpha = options.alpha;
    spec.iters = options.iters;
    spec.init_noise_std = options.init_noise_std;
    spec.seed = derive_seed(options.seed, {cell.n, cell.d, cell.q, k});
    PartialTrialOptions trial_options;
    trial_options.bypass_gate = options.bypass_gate;
    const TrialResult result = run_partial_trial(spec, trial_options);
    cell.xs[k] = result.x_factor.value_or(std::numeric_limits<double>::quiet_NaN());
  });

  for (SweepCell& cell : cells) {
    if (!cell.feasible) {
      cell.mean_x = cell.std_x = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double sum = 0.0;
    for (double x : cell.xs) sum += x;
    cell.mean_x = sum / static_cast<double>(cell.xs.size());
    double ss = 0.0;
    for (double x : cell.xs) ss += (x - cell.mean_x) * (x - cell.mean_x);
    cell.std_x = cell.xs.size() > 1 ? std::sqrt(ss / static_cast<double>(cell.xs.size() - 1)) : 0.0;
  }
  return cells;
}

ProblemSpec read_problem_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open spec file: " + path);
  ProblemSpec spec;
  bool has_n = false, has_d = false, has_seed = false;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::io, path + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "n") {
      spec.n = csv::parse_count(value);
      has_n = true;
    } else if (key == "d") {
      spec.d = csv::parse_count(value);
      has_d = true;
    } else if (key == "q") {
      if (value == "full") spec.q.reset();
      else spec.q = csv::parse_count(value);
    } else if (key == "alpha") {
      spec.alpha = csv::parse_double(value);
    } else if (key == "iters") {
      spec.iters = csv::parse_count(value);
    } else if (key == "seed") {
      spec.seed = csv::parse_count(value);
      has_seed = true;
    } else if (key == "init_noise_std") {
      spec.init_noise_std = csv::parse_double(value);
    } else {
      throw Error(ErrorKind::io, path + ": unknown key '" + key + "'");
    }
  }
  if (!has_n || !has_d || !has_seed) throw Error(ErrorKind::io, path + ": n, d and seed are required");
  return spec;
}

void write_problem_spec(const std::string& path, const ProblemSpec& spec) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write spec file: " + path);
  out << "n = " << spec.n << '\n'
      << "d = " << spec.d << '\n'
      << "q = " << (spec.q ? std::to_string(*spec.q) : std::string("full")) << '\n'
      << "alpha = " << csv::format_double(spec.alpha) << '\n'
      << "iters = " << spec.iters << '\n'
      << "seed = " << spec.seed << '\n'
      << "init_noise_std = " << csv::format_double(spec.init_noise_std) << '\n';
  if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

void write_trajectory_csv(const std::string& path, const TrialResult& result) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  csv::Table table;
  table.header = {"t", "epsilon", "gate_passed", "norm_r", "norm_p", "theta"};
  auto eps_at = [&](std::size_t t) {
    return t < result.epsilons.size() ? result.epsilons[t] : nan;
  };
  table.rows.push_back({"0", csv::format_double(eps_at(0)), "nan", "nan", "nan", "nan"});
  for (std::size_t t = 0; t < result.steps.size(); ++t) {
    const StepSummary& s = result.steps[t];
    table.rows.push_back({std::to_string(t + 1), csv::format_double(eps_at(t + 1)),
                          s.gate_passed ? "1" : "0", csv::format_double(s.norm_r),
                          csv::format_double(s.norm_p), csv::format_double(s.theta.value_or(nan))});
  }
  csv::write(path, table);
}

void write_sweep_csv(const std::string& path, const std::vector<SweepCell>& cells) {
  csv::Table table;
  table.header = {"n", "d", "q", "trials", "mean_X", "std_X"};
  for (const SweepCell& c : cells) {
    table.rows.push_back({std::to_string(c.n), std::to_string(c.d), std::to_string(c.q),
                          std::to_string(c.feasible ? c.trials : 0), csv::format_double(c.mean_x),
                          csv::format_double(c.std_x)});
  }
  csv::write(path, table);
}

}  // namespace grouse
