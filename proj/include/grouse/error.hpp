#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grouse {

enum class ErrorKind {
  shape,
  non_finite,
  rank_deficient,
  singular_normal_equations,
  singular_alignment,
  not_symmetric,
  undefined_coherence,
  degenerate_projection,
  no_revealed_direction,
  gate_bypassed_singular,
  invalid_argument,
  io,
};

constexpr std::string_view error_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::shape: return "shape";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::rank_deficient: return "rank_deficient";
    case ErrorKind::singular_normal_equations: return "singular_normal_equations";
    case ErrorKind::singular_alignment: return "singular_alignment";
    case ErrorKind::not_symmetric: return "not_symmetric";
    case ErrorKind::undefined_coherence: return "undefined_coherence";
    case ErrorKind::degenerate_projection: return "degenerate_projection";
    case ErrorKind::no_revealed_direction: return "no_revealed_direction";
    case ErrorKind::gate_bypassed_singular: return "gate_bypassed_singular";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library. `kind()` is stable and is what the
/// CLI reports; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return error_name(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace grouse
