#include "grouse/partial.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "grouse/csv.hpp"
#include "grouse/kernels.hpp"

namespace grouse {
namespace {

Mat sampled_rows(const Mat& m, std::span<const std::size_t> omega) {
  Mat out(static_cast<Eigen::Index>(omega.size()), m.cols());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(omega[i]));
  }
  return out;
}

StepRecord skipped_record(const GateVerdict& gate, Eigen::Index n, Eigen::Index d, double alpha) {
  StepRecord rec;
  rec.gate = gate;
  rec.w = Vec::Zero(d);
  rec.p = Vec::Zero(n);
  rec.r = Vec::Zero(n);
  rec.alpha = alpha;
  rec.taken = false;
  return rec;
}

std::optional<double> revealed_theta(const Basis& u, const Observation& obs,
                                     const std::optional<Basis>& ubar) {
  if (!ubar || !obs.latent_s || obs.latent_s->size() != ubar->d()) return std::nullopt;
  const Vec v = ubar->mat() * *obs.latent_s;
  if (!(v.squaredNorm() > 0.0)) return std::nullopt;
  return std::asin(std::sqrt(revealed_angle_sin_sq(u, v)));
}

}  // namespace

void Observation::validate(Eigen::Index n) const {
  if (static_cast<Eigen::Index>(omega.size()) != values.size()) {
    throw Error(ErrorKind::shape, "Observation: omega and values differ in length");
  }
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (static_cast<Eigen::Index>(omega[i]) >= n) {
      throw Error(ErrorKind::invalid_argument, "Observation: index out of range");
    }
    if (i > 0 && omega[i] <= omega[i - 1]) {
      throw Error(ErrorKind::invalid_argument, "Observation: indices must be strictly increasing");
    }
  }
  require_finite(values, "Observation");
}

GateVerdict gate_check(const Basis& u, std::span<const std::size_t> omega) {
  GateVerdict verdict;
  const double ratio = static_cast<double>(omega.size()) / static_cast<double>(u.n());
  verdict.lower_bound = 0.5 * ratio;
  verdict.upper_bound = 1.5 * ratio;
  if (omega.empty()) return verdict;

  // Eigenvalues of [U]_Ωᵀ[U]_Ω are the squared singular values of [U]_Ω.
  const Vec sv = singular_values(sampled_rows(u.mat(), omega));
  verdict.eigen_max = sv(0) * sv(0);
  if (static_cast<Eigen::Index>(omega.size()) < u.d()) {
    verdict.eigen_min = 0.0;
    verdict.passed = false;
    return verdict;
  }
  const double smallest = sv(sv.size() - 1);
  verdict.eigen_min = smallest * smallest;
  verdict.passed =
      verdict.eigen_min >= verdict.lower_bound && verdict.eigen_max <= verdict.upper_bound;
  return verdict;
}

PartialResidual partial_residual(const Basis& u, const Observation& obs) {
  obs.validate(u.n());
  const Mat c = sampled_rows(u.mat(), obs.omega);
  PartialResidual out;
  try {
    out.w = least_squares(c, obs.values);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::singular_normal_equations) {
      throw Error(ErrorKind::gate_bypassed_singular,
                  "partial_residual: gate bypassed on singular sample");
    }
    throw;
  }
  out.p = u.mat() * out.w;
  out.r = Vec::Zero(u.n());
  const Vec fitted = c * out.w;
  for (std::size_t i = 0; i < obs.omega.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(obs.omega[i]);
    out.r(row) = obs.values(static_cast<Eigen::Index>(i)) - fitted(static_cast<Eigen::Index>(i));
  }
  return out;
}

StepSize step_size(double sigma, double norm_r, double norm_p, double alpha) {
  if (!(norm_p > 0.0)) throw Error(ErrorKind::degenerate_projection, "step_size: degenerate projection");
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw Error(ErrorKind::invalid_argument, "step_size: alpha must lie in (0, 2)");
  }
  StepSize out;
  double arg = alpha * norm_r / norm_p;
  if (arg > 1.0) {
    arg = 1.0;
    out.clamped = true;
  }
  out.angle = std::asin(arg);
  out.eta = sigma > 0.0 ? out.angle / sigma : 0.0;
  if (!(sigma > 0.0)) out.angle = 0.0;
  return out;
}

Basis apply_update(const Basis& u, const StepRecord& rec) {
  const double norm_r = rec.r.norm();
  if (!(norm_r > 0.0)) return u;
  const double norm_w = rec.w.norm();
  if (!(norm_w > 0.0)) throw Error(ErrorKind::no_revealed_direction, "apply_update: no revealed direction");
  const double norm_p = rec.p.norm();
  const double angle = rec.sigma * rec.eta;

  const Vec left = ((std::cos(angle) - 1.0) / norm_p) * rec.p + (std::sin(angle) / norm_r) * rec.r;
  Mat next = u.mat();
  kernels::rank_one_update(next, left, rec.w / norm_w);
  return Basis::unchecked(std::move(next));
}

StepOutcome grouse_step(const Basis& u, const Observation& obs, const StepOptions& options,
                        const std::optional<Basis>& ubar) {
  obs.validate(u.n());
  if (ubar) require_same_shape(u, *ubar, "grouse_step");
  const std::optional<double> eps_before =
      ubar ? std::optional<double>(epsilon(u, *ubar)) : std::nullopt;

  const GateVerdict gate = gate_check(u, obs.omega);
  auto unchanged = [&](const GateVerdict& g) {
    StepRecord rec = skipped_record(g, u.n(), u.d(), options.alpha);
    rec.epsilon_before = eps_before;
    rec.epsilon_after = eps_before;
    rec.theta = revealed_theta(u, obs, ubar);
    return StepOutcome{u, std::move(rec)};
  };
  if (!gate.passed && !options.bypass_gate) return unchanged(gate);
  if (static_cast<Eigen::Index>(obs.omega.size()) < u.d()) return unchanged(gate);

  PartialResidual res;
  try {
    res = partial_residual(u, obs);
  } catch (const Error& e) {
    if (options.bypass_gate && e.kind() == ErrorKind::gate_bypassed_singular) return unchanged(gate);
    throw;
  }

  StepRecord rec;
  rec.gate = gate;
  rec.alpha = options.alpha;
  rec.taken = true;
  rec.theta = revealed_theta(u, obs, ubar);
  const double norm_r = res.r.norm();
  const double norm_p = res.p.norm();
  rec.w = std::move(res.w);
  rec.p = std::move(res.p);
  rec.r = std::move(res.r);
  rec.epsilon_before = eps_before;

  if (norm_r <= kZeroResidualRatio * obs.values.norm()) {
    // v is explained on Ω: identity update.
    rec.r.setZero();
    rec.epsilon_after = eps_before;
    return StepOutcome{u, std::move(rec)};
  }

  rec.sigma = norm_r * norm_p;
  const StepSize step = step_size(rec.sigma, norm_r, norm_p, options.alpha);
  rec.eta = step.eta;
  rec.clamped = step.clamped;

  Basis next = apply_update(u, rec);
  if (ubar) rec.epsilon_after = epsilon(next, *ubar);
  return StepOutcome{std::move(next), std::move(rec)};
}

TrialResult run_stream(const Basis& u0, std::span<const Observation> stream,
                       const StreamOptions& options, const std::optional<Basis>& ubar) {
  const auto start = std::chrono::steady_clock::now();
  TrialResult result;
  result.steps.reserve(stream.size());
  if (ubar) {
    require_same_shape(u0, *ubar, "run_stream");
    result.epsilons.reserve(stream.size() + 1);
    result.epsilons.push_back(epsilon(u0, *ubar));
  }

  Basis u = u0;
  std::size_t since_reortho = 0;
  for (std::size_t t = 0; t < stream.size(); ++t) {
    // ε is tracked here rather than inside grouse_step so it is computed once per step.
    StepOutcome out = grouse_step(u, stream[t], options.step);
    const StepRecord& rec = out.record;

    StepSummary summary;
    summary.gate_passed = rec.gate.passed;
    summary.taken = rec.taken;
    summary.norm_r = rec.r.norm();
    summary.norm_p = rec.p.norm();
    summary.theta = revealed_theta(u, stream[t], ubar);
    if (!rec.taken) ++result.gate_skips;
    if (rec.clamped) ++result.clamped_steps;

    u = std::move(out.basis);
    if (rec.taken) {
      ++since_reortho;
      const bool due = options.reortho_every > 0 && since_reortho >= options.reortho_every;
      const bool check = options.drift_check_every > 0 && since_reortho % options.drift_check_every == 0;
      if (due || (check && u.drift() > Basis::kDriftBudget)) {
        u = Basis::orthonormalized(u.mat());
        since_reortho = 0;
        ++result.reorthonormalizations;
      }
    }
    if (ubar) result.epsilons.push_back(epsilon(u, *ubar));
    result.steps.push_back(summary);
  }

  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<Observation> read_observations(const std::string& path, Eigen::Index* n_out) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open observation file: " + path);
  std::vector<Observation> out;
  Eigen::Index n = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = csv::split(line, ',');
    if (fields.size() != 4) {
      throw Error(ErrorKind::io, path + ":" + std::to_string(line_no) + ": expected 4 fields");
    }
    if (line_no == 1 && fields[0] == "t") continue;  // header

    const auto row_n = static_cast<Eigen::Index>(csv::parse_count(fields[1]));
    if (n < 0) n = row_n;
    if (row_n != n) {
      throw Error(ErrorKind::io, path + ":" + std::to_string(line_no) + ": inconsistent n");
    }
    Observation obs;
    for (const auto& tok : csv::split(fields[2], ';')) {
      const std::size_t idx = csv::parse_count(tok);
      if (idx < 1) throw Error(ErrorKind::io, path + ": indices are 1-based");
      obs.omega.push_back(idx - 1);
    }
    const auto vals = csv::split(fields[3], ';');
    obs.values.resize(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) {
      obs.values(static_cast<Eigen::Index>(i)) = csv::parse_double(vals[i]);
    }
    try {
      obs.validate(n);
    } catch (const Error& e) {
      throw Error(ErrorKind::io, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(obs));
  }
  if (n_out) *n_out = n;
  return out;
}

void write_observations(const std::string& path, std::span<const Observation> stream,
                        Eigen::Index n) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write observation file: " + path);
  out << "t,n,indices,values\n";
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const Observation& obs = stream[t];
    out << (t + 1) << ',' << n << ',';
    for (std::size_t i = 0; i < obs.omega.size(); ++i) {
      if (i) out << ';';
      out << (obs.omega[i] + 1);
    }
    out << ',';
    for (Eigen::Index i = 0; i < obs.values.size(); ++i) {
      if (i) out << ';';
      out << csv::format_double(obs.values(i));
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

}  // namespace grouse
