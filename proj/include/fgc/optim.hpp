#pragma once

#include <span>

#include "fgc/tape.hpp"

namespace fgc::nd {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update on every parameter, then zeroes the grads.
void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg);

}  // namespace fgc::nd
