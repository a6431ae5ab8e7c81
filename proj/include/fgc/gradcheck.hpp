#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "fgc/tape.hpp"

namespace fgc::nd {

struct GradCheckOptions {
  double step = 1e-5;
  double rel_tol = 1e-4;
  /// Coordinates sampled per parameter; small parameters are checked in full.
  std::size_t coords_per_param = 50;
  /// Denominator floor, so coordinates whose true gradient is ~0 are judged
  /// on absolute error instead of amplified round-off.
  double abs_floor = 1e-6;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0;
  double worst_numeric = 0;
  std::size_t coords_checked = 0;
  bool passed = false;
};

/// Records the scalar (1×1) loss on a fresh tape.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares tape gradients against central differences of `build_loss`.
/// Parameter values are restored on return; their grads are left zeroed.
GradCheckReport finite_diff_check(const LossBuilder& build_loss,
                                  std::span<Parameter* const> params,
                                  const GradCheckOptions& opts = {});

}  // namespace fgc::nd
