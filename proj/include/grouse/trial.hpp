#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace grouse {

/// What one iteration of a run reports for the trajectory file.
struct StepSummary {
  bool gate_passed = false;
  bool taken = false;
  double norm_r = 0.0;
  double norm_p = 0.0;
  std::optional<double> theta;  // angle between v_t and range(U_t), when v_t is known
};

/// Outcome of a streamed run. `epsilons` holds ε_0..ε_N when a target basis
/// was supplied and is empty otherwise; `steps[t]` describes the step that
/// produced ε_{t+1}.
struct TrialResult {
  std::vector<double> epsilons;
  std::vector<StepSummary> steps;
  std::size_t gate_skips = 0;
  std::size_t clamped_steps = 0;
  std::size_t reorthonormalizations = 0;
  std::optional<double> x_factor;
  std::optional<double> tail_slope;
  double wall_time = 0.0;  // seconds
};

}  // namespace grouse
