#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace grouse {

/// How independent Monte-Carlo trials are scheduled. Results are identical
/// under both policies: every trial draws from its own derived seed and writes
/// its own slot.
enum class Execution { serial, parallel };

/// Runs fn(i) for i in [0, count). Exceptions cannot cross an OpenMP region,
/// so they are captured per trial and the lowest-index one is rethrown.
template <class Fn>
void for_each_trial(std::size_t count, Execution exec, Fn&& fn) {
  if (exec == Execution::serial) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace grouse
