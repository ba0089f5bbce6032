#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "grouse/harness.hpp"

namespace grouse::cli {

enum ExitCode : int {
  kOk = 0,
  kIoFailure = 1,
  kUsage = 2,
  kNumericFailure = 3,
};

enum class Verb {
  full,
  partial,
  sweep,
  validate_concentration,
  validate_residual,
  validate_expectation,
  skip_rate,
};

struct Command {
  Verb verb = Verb::full;
  ProblemSpec spec;
  std::string out_path;

  // partial
  bool bypass_gate = false;
  std::size_t reortho_every = 100;
  std::string observations_path;
  std::string emit_observations_path;

  // sweep
  SweepGrid grid;
  std::size_t trials = 0;

  // validators
  double delta = 0.1;
  std::optional<std::size_t> omega_size;
  double epsilon = 0.0;
};

/// Thrown by parse_args. exit_code is kUsage, or kOk for --help.
struct UsageError {
  int exit_code;
  std::string message;
};

Command parse_args(const std::vector<std::string>& args);

/// Runs a validated command, writing its CSV to out_path and a one-line
/// summary to `out`.
int execute(const Command& cmd, std::ostream& out, std::ostream& err);

/// parse_args + execute with exit-code mapping; what main() calls.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grouse::cli
