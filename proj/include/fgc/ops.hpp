#pragma once

// Differentiable primitives recorded on a Tape. Each forward computes the value
// eagerly; each backward rule is the exact analytic derivative.

#include <cstdint>
#include <span>
#include <vector>

#include "fgc/kernels.hpp"
#include "fgc/tape.hpp"

namespace fgc::nd {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kBceClamp = 1e-7;

double sigmoid(double x) noexcept;

/// a (n×k) · b (k×m).
Var matmul(Tape& t, Var a, Var b);
/// x (n×in) · wᵀ where w is out×in; the layout used by every weight here.
Var linear(Tape& t, Var x, Var w);
Var add(Tape& t, Var a, Var b);
/// Adds a 1×cols row vector to every row of x.
Var add_row_bias(Tape& t, Var x, Var bias);
Var scale(Tape& t, Var x, double s);
Var sigmoid(Tape& t, Var x);
Var relu(Tape& t, Var x);
/// Horizontal concatenation of same-height blocks.
Var concat_cols(Tape& t, std::span<const Var> parts);
/// Row-wise normalization with a learned 1×cols affine (gain, shift).
Var layer_norm(Tape& t, Var x, Var gain, Var shift, double eps = kLayerNormEps);
/// Row i = alpha_i · a_i + (1 − alpha_i) · b_i, alpha is n×1.
Var convex_mix(Tape& t, Var alpha, Var a, Var b);
/// Row i = mean of the rows of h listed in segment i (zero when empty).
/// The segment storage must outlive the tape.
Var segment_mean(Tape& t, Var h, kernels::Segments segments);
/// Sum of squared entries, 1×1.
Var sum_squares(Tape& t, Var x);

/// Mean binary cross-entropy over `nodes`, computed from logits (n×1) with the
/// fused, overflow-free softplus form. Positives are weighted by pos_weight.
/// Targets of nodes outside `nodes` are never read.
Var bce_with_logits(Tape& t, Var logits, std::span<const std::uint8_t> targets,
                    std::span<const std::uint32_t> nodes, double pos_weight = 1.0);

/// Mean BCE on probabilities clamped to [kBceClamp, 1 − kBceClamp].
double bce_loss(std::span<const double> probs, std::span<const std::uint8_t> targets);

}  // namespace fgc::nd
