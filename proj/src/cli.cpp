#include "grouse/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <ostream>

#include "grouse/concentration.hpp"
#include "grouse/csv.hpp"
#include "grouse/random.hpp"

namespace grouse::cli {
namespace {

struct Flags {
  std::size_t n = 0, d = 0, q = 0, iters = 500, trials = 0, omega_size = 0, reortho_every = 100;
  std::uint64_t seed = 0;
  double alpha = 1.0, init_noise_std = 0.5, delta = 0.1, epsilon = 0.0;
  std::vector<std::size_t> ns, ds, qs;
  std::string out, spec_file, observations, emit_observations;
  bool bypass_gate = false;
};

void add_spec_flags(CLI::App* sub, Flags& f, bool with_q) {
  sub->add_option("--spec", f.spec_file, "Run-spec file (key = value); flags override it");
  sub->add_option("--n", f.n, "Ambient dimension");
  sub->add_option("--d", f.d, "Subspace dimension");
  if (with_q) sub->add_option("--q", f.q, "Entries observed per vector");
  sub->add_option("--alpha", f.alpha, "Step-size fudge factor in (0, 2)");
  sub->add_option("--iters", f.iters, "Iterations N");
  sub->add_option("--seed", f.seed, "Random seed (required)");
  sub->add_option("--init_noise_std", f.init_noise_std, "Std of the perturbation giving U0");
  sub->add_option("--out", f.out, "Output CSV path")->required();
}

[[noreturn]] void usage(const std::string& message, const CLI::App& app) {
  throw UsageError{kUsage, message + "\n" + app.help()};
}

bool given(const CLI::App* sub, const char* flag) {
  const CLI::Option* opt = sub->get_option_no_throw(flag);
  return opt != nullptr && opt->count() > 0;
}

void require(const CLI::App* sub, const char* flag, const CLI::App& app) {
  if (!given(sub, flag)) usage(std::string("missing required flag ") + flag, app);
}

ProblemSpec build_spec(const CLI::App* sub, const Flags& f, const CLI::App& app) {
  ProblemSpec spec;
  if (!f.spec_file.empty()) {
    spec = read_problem_spec(f.spec_file);
  } else {
    require(sub, "--n", app);
    require(sub, "--d", app);
    require(sub, "--seed", app);
  }
  if (given(sub, "--n")) spec.n = f.n;
  if (given(sub, "--d")) spec.d = f.d;
  if (given(sub, "--alpha")) spec.alpha = f.alpha;
  if (given(sub, "--iters")) spec.iters = f.iters;
  if (given(sub, "--seed")) spec.seed = f.seed;
  if (given(sub, "--init_noise_std")) spec.init_noise_std = f.init_noise_std;
  return spec;
}

void check_basic_shape(std::size_t n, std::size_t d, const CLI::App& app) {
  if (d < 1) usage("d must be ≥ 1", app);
  if (d >= n) usage("d must be < n", app);
}

}  // namespace

Command parse_args(const std::vector<std::string>& args) {
  CLI::App app{"Subspace tracking with GROUSE and Monte-Carlo checks of its convergence theory",
               "grouse"};
  app.require_subcommand(1, 1);
  Flags f;

  auto* full = app.add_subcommand("full", "Full-data run; writes the ε trajectory");
  add_spec_flags(full, f, false);

  auto* partial = app.add_subcommand("partial", "Partial-data run; writes the ε trajectory");
  add_spec_flags(partial, f, true);
  partial->add_flag("--bypass_gate", f.bypass_gate, "Take every step regardless of the eigenvalue gate");
  partial->add_option("--reortho_every", f.reortho_every, "Re-orthonormalize every k taken steps");
  partial->add_option("--observations", f.observations, "Replay observations from this CSV");
  partial->add_option("--emit_observations", f.emit_observations, "Write the synthetic stream here");

  auto* sweep = app.add_subcommand("sweep", "Mean X over a grid of (n, d, q)");
  sweep->add_option("--n", f.ns, "Ambient dimensions")->delimiter(',')->required();
  sweep->add_option("--d", f.ds, "Subspace dimensions")->delimiter(',')->required();
  sweep->add_option("--q", f.qs, "Sample sizes")->delimiter(',')->required();
  sweep->add_option("--trials", f.trials, "Trials per cell")->required();
  sweep->add_option("--iters", f.iters, "Iterations N per trial");
  sweep->add_option("--seed", f.seed, "Random seed")->required();
  sweep->add_option("--alpha", f.alpha, "Step-size fudge factor in (0, 2)");
  sweep->add_option("--init_noise_std", f.init_noise_std, "Std of the perturbation giving U0");
  sweep->add_flag("--bypass_gate", f.bypass_gate, "Take every step regardless of the eigenvalue gate");
  sweep->add_option("--out", f.out, "Output CSV path")->required();

  auto add_validator = [&f](CLI::App* sub) {
    sub->add_option("--n", f.n, "Ambient dimension")->required();
    sub->add_option("--d", f.d, "Subspace dimension")->required();
    sub->add_option("--trials", f.trials, "Monte-Carlo trials")->required();
    sub->add_option("--seed", f.seed, "Random seed")->required();
    sub->add_option("--out", f.out, "Output CSV path")->required();
  };
  auto* conc = app.add_subcommand("validate-concentration", "Sampled Gram eigenvalue window");
  add_validator(conc);
  conc->add_option("--delta", f.delta, "Failure probability δ");
  conc->add_option("--omega_size", f.omega_size, "|Ω| (default: smallest size meeting the hypothesis)");

  auto* resid = app.add_subcommand("validate-residual", "Residual lower bound");
  add_validator(resid);
  resid->add_option("--delta", f.delta, "Failure probability δ");
  resid->add_option("--omega_size", f.omega_size, "|Ω| (default: smallest size meeting the hypothesis)");
  resid->add_option("--epsilon", f.epsilon, "ε between the estimate and the target");

  auto* expect = app.add_subcommand("validate-expectation", "E[sin²θ] against ε/d");
  add_validator(expect);
  expect->add_option("--epsilon", f.epsilon, "ε between the estimate and the target");

  auto* skip = app.add_subcommand("skip-rate", "Fraction of samples failing the eigenvalue gate");
  add_validator(skip);
  skip->add_option("--q", f.q, "Entries observed per vector")->required();
  skip->add_option("--epsilon", f.epsilon, "ε between the estimate and the target");

  std::vector<const char*> argv;
  argv.push_back("grouse");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    throw UsageError{kOk, app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw UsageError{kOk, app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    const CLI::App* active = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    throw UsageError{kUsage, std::string(e.what()) + "\n" + active->help()};
  }

  Command cmd;
  cmd.out_path = f.out;
  const CLI::App* sub = app.get_subcommands().front();
  try {
    if (sub == full || sub == partial) {
      cmd.verb = sub == full ? Verb::full : Verb::partial;
      cmd.spec = build_spec(sub, f, *sub);
      if (sub == partial) {
        if (given(sub, "--q")) cmd.spec.q = f.q;
        if (!cmd.spec.q) usage("missing required flag --q", *sub);
        cmd.bypass_gate = f.bypass_gate;
        cmd.reortho_every = f.reortho_every;
        cmd.observations_path = f.observations;
        cmd.emit_observations_path = f.emit_observations;
      } else {
        cmd.spec.q.reset();
      }
      cmd.spec.validate();
    } else if (sub == sweep) {
      cmd.verb = Verb::sweep;
      cmd.grid = SweepGrid{f.ns, f.ds, f.qs};
      cmd.trials = f.trials;
      cmd.spec.iters = f.iters;
      cmd.spec.seed = f.seed;
      cmd.spec.alpha = f.alpha;
      cmd.spec.init_noise_std = f.init_noise_std;
      cmd.bypass_gate = f.bypass_gate;
      if (f.trials < 1) usage("trials must be ≥ 1", *sub);
      if (f.iters < 1) usage("iters must be ≥ 1", *sub);
      if (!(f.alpha > 0.0 && f.alpha < 2.0)) usage("alpha must lie in (0, 2)", *sub);
    } else {
      check_basic_shape(f.n, f.d, *sub);
      cmd.spec.n = f.n;
      cmd.spec.d = f.d;
      cmd.spec.seed = f.seed;
      cmd.trials = f.trials;
      cmd.delta = f.delta;
      cmd.epsilon = f.epsilon;
      if (f.trials < 1) usage("trials must be ≥ 1", *sub);
      if (!(f.delta > 0.0 && f.delta < 1.0)) usage("delta must lie in (0, 1)", *sub);
      if (!(f.epsilon >= 0.0 && f.epsilon <= static_cast<double>(f.d))) {
        usage("epsilon must lie in [0, d]", *sub);
      }
      if (given(sub, "--omega_size")) {
        if (f.omega_size < 1) usage("omega_size must be ≥ 1", *sub);
        cmd.omega_size = f.omega_size;
      }
      if (sub == conc) {
        cmd.verb = Verb::validate_concentration;
      } else if (sub == resid) {
        cmd.verb = Verb::validate_residual;
      } else if (sub == expect) {
        cmd.verb = Verb::validate_expectation;
      } else {
        cmd.verb = Verb::skip_rate;
        if (f.q < f.d) usage("q must be ≥ d", *sub);
        if (f.q > f.n) usage("q must be ≤ n", *sub);
        cmd.spec.q = f.q;
      }
      if (sub != conc && f.n < 2 * f.d) usage("n must be ≥ 2d for a pair at prescribed ε", *sub);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    throw UsageError{kUsage, std::string(e.what()) + "\n" + sub->help()};
  }
  return cmd;
}

namespace {

// Target basis and an estimate at the requested ε, both from the seed.
Problem validator_pair(const Command& cmd) {
  ProblemSpec spec;
  spec.n = cmd.spec.n;
  spec.d = cmd.spec.d;
  spec.seed = cmd.spec.seed;
  spec.init_noise_std = 0.0;
  Problem problem = generate_problem(spec);
  if (cmd.epsilon > 0.0) {
    problem.u0 = basis_at_epsilon(problem.ubar, cmd.epsilon, derive_seed(cmd.spec.seed, {2}));
  }
  return problem;
}

std::string fmt(double x) { return csv::format_double(x); }

int execute_impl(const Command& cmd, std::ostream& out) {
  switch (cmd.verb) {
    case Verb::full: {
      const TrialResult r = run_full_trial(cmd.spec);
      write_trajectory_csv(cmd.out_path, r);
      out << "final_epsilon=" << fmt(r.epsilons.back()) << " X=" << fmt(r.x_factor.value_or(NAN))
          << " tail_slope=" << fmt(r.tail_slope.value_or(NAN)) << '\n';
      return kOk;
    }
    case Verb::partial: {
      const Problem problem = generate_problem(cmd.spec);
      std::vector<Observation> stream;
      if (!cmd.observations_path.empty()) {
        Eigen::Index n = 0;
        stream = read_observations(cmd.observations_path, &n);
        if (!stream.empty() && n != static_cast<Eigen::Index>(cmd.spec.n)) {
          throw Error(ErrorKind::io, "observation file n differs from --n");
        }
      } else {
        stream = synthesize_stream(cmd.spec, problem.ubar);
      }
      if (!cmd.emit_observations_path.empty()) {
        write_observations(cmd.emit_observations_path, stream, static_cast<Eigen::Index>(cmd.spec.n));
      }
      StreamOptions options;
      options.step.alpha = cmd.spec.alpha;
      options.step.bypass_gate = cmd.bypass_gate;
      options.reortho_every = cmd.reortho_every;
      TrialResult r = run_stream(problem.u0, stream, options, problem.ubar);
      const double e0 = r.epsilons.front();
      const double en = r.epsilons.back();
      if (!stream.empty() && e0 > 0.0 && en > 0.0) {
        r.x_factor = fit_x(e0, en, cmd.spec.n, cmd.spec.d, *cmd.spec.q, stream.size());
      }
      write_trajectory_csv(cmd.out_path, r);
      out << "final_epsilon=" << fmt(en) << " X=" << fmt(r.x_factor.value_or(NAN))
          << " gate_skips=" << r.gate_skips << '\n';
      return kOk;
    }
    case Verb::sweep: {
      SweepOptions options;
      options.trials_per_cell = cmd.trials;
      options.iters = cmd.spec.iters;
      options.seed = cmd.spec.seed;
      options.alpha = cmd.spec.alpha;
      options.init_noise_std = cmd.spec.init_noise_std;
      options.bypass_gate = cmd.bypass_gate;
      const auto cells = sweep_phase(cmd.grid, options);
      write_sweep_csv(cmd.out_path, cells);
      std::size_t feasible = 0;
      for (const auto& c : cells) feasible += c.feasible ? 1 : 0;
      out << "cells=" << cells.size() << " feasible=" << feasible << '\n';
      return kOk;
    }
    case Verb::validate_concentration: {
      const Problem problem = validator_pair(cmd);
      const auto d = cmd.spec.d;
      const std::size_t size = cmd.omega_size.value_or(
          minimal_hypothesis_size(d, coherence_basis(problem.ubar), cmd.delta));
      const auto report = validate_gram_concentration(problem.ubar, size, cmd.delta, cmd.trials,
                                                      derive_seed(cmd.spec.seed, {3}));
      write_concentration_csv(cmd.out_path, report);
      out << "failure_rate=" << fmt(report.failure_rate) << " omega_size=" << size
          << " gamma=" << fmt(report.gamma)
          << " hypothesis=" << (report.hypothesis_met ? "met" : "unmet") << '\n';
      return kOk;
    }
    case Verb::validate_residual: {
      const Problem problem = validator_pair(cmd);
      const std::size_t size = cmd.omega_size.value_or(
          minimal_hypothesis_size(cmd.spec.d, coherence_basis(problem.u0), cmd.delta));
      const auto report = validate_residual_bound(problem.u0, problem.ubar, size, cmd.delta,
                                                  cmd.trials, derive_seed(cmd.spec.seed, {3}));
      write_residual_csv(cmd.out_path, report);
      out << "violation_rate=" << fmt(report.violation_rate)
          << " asserted=" << report.asserted_trials << " omega_size=" << size << '\n';
      return kOk;
    }
    case Verb::validate_expectation: {
      const Problem problem = validator_pair(cmd);
      const auto est = validate_sin_sq_expectation(problem.u0, problem.ubar, cmd.trials,
                                                   derive_seed(cmd.spec.seed, {3}));
      const double eps = epsilon(problem.u0, problem.ubar);
      const double expected = eps / static_cast<double>(cmd.spec.d);
      csv::Table table;
      table.header = {"epsilon", "d", "trials", "mean", "stderr", "expected"};
      table.rows.push_back({fmt(eps), std::to_string(cmd.spec.d), std::to_string(cmd.trials),
                            fmt(est.mean), fmt(est.std_error), fmt(expected)});
      csv::write(cmd.out_path, table);
      out << "mean=" << fmt(est.mean) << " stderr=" << fmt(est.std_error)
          << " expected=" << fmt(expected) << '\n';
      return kOk;
    }
    case Verb::skip_rate: {
      const Problem problem = validator_pair(cmd);
      const double rate = estimate_skip_rate(problem.u0, *cmd.spec.q, cmd.trials,
                                             derive_seed(cmd.spec.seed, {3}));
      csv::Table table;
      table.header = {"n", "d", "q", "trials", "skip_rate"};
      table.rows.push_back({std::to_string(cmd.spec.n), std::to_string(cmd.spec.d),
                            std::to_string(*cmd.spec.q), std::to_string(cmd.trials), fmt(rate)});
      csv::write(cmd.out_path, table);
      out << "skip_rate=" << fmt(rate) << '\n';
      return kOk;
    }
  }
  return kUsage;
}

}  // namespace

int execute(const Command& cmd, std::ostream& out, std::ostream& err) {
  try {
    return execute_impl(cmd, out);
  } catch (const Error& e) {
    err << "error: " << e.name() << ": " << e.what() << '\n';
    return e.kind() == ErrorKind::io ? kIoFailure : kNumericFailure;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Command cmd;
  try {
    cmd = parse_args(args);
  } catch (const UsageError& u) {
    (u.exit_code == kOk ? out : err) << u.message;
    return u.exit_code;
  } catch (const Error& e) {
    err << "error: " << e.name() << ": " << e.what() << '\n';
    return e.kind() == ErrorKind::io ? kIoFailure : kUsage;
  }
  return execute(cmd, out, err);
}

}  // namespace grouse::cli
