#pragma once

// Neighbor-grouped attribute-completion layer.
//
// For every center node i the layer averages its fraud, benign, and unknown
// neighbors separately, maps the fraud and benign means through their own
// weights, and maps the unknown mean through a per-node convex mixture of the
// two, weighted by a sigmoid gate on h_i. The four messages (self, fraud,
// benign, unknown) are concatenated, projected by W_c, passed through ReLU and
// layer normalization, and added back onto the input as a residual.

#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "fgc/graph.hpp"
#include "fgc/ops.hpp"

namespace fgc {

struct FgcLayerParams {
  std::size_t in_dim = 0;
  std::size_t hidden = 0;
  nd::Parameter w_self;    // hidden × in
  nd::Parameter w_fraud;   // hidden × in
  nd::Parameter w_benign;  // hidden × in
  nd::Parameter w_fuse;    // hidden × 4·hidden
  nd::Parameter gate_q;    // 1 × in
  nd::Parameter gate_b;    // 1 × 1
  nd::Parameter ln_gain;   // 1 × hidden
  nd::Parameter ln_shift;  // 1 × hidden
  std::optional<nd::Parameter> res_proj;  // hidden × in, only when in != hidden

  /// Glorot weights; zero gate (alpha = 0.5); unit gain, zero shift; zero projection.
  static FgcLayerParams init(std::size_t in_dim, std::size_t hidden, std::mt19937_64& rng,
                             const std::string& prefix = "fgc0");

  std::vector<nd::Parameter*> parameters();
};

/// Variables bound to one layer's parameters on a given tape.
struct LayerVars {
  nd::Var w_self, w_fraud, w_benign, w_fuse, gate_q, gate_b, ln_gain, ln_shift;
  std::optional<nd::Var> res_proj;
};
LayerVars bind(nd::Tape& t, FgcLayerParams& params);

struct GroupMessages {
  nd::Var self, fraud, benign, unknown;
};

/// alpha_i = sigmoid(q · h_i + b), n×1.
nd::Var gate_alpha(nd::Tape& t, const LayerVars& p, nd::Var h);

/// Row i = (alpha_i W_fr + (1 − alpha_i) W_be) · mean_un(i), computed as the
/// convex combination of the two projections.
nd::Var mixed_unknown_apply(nd::Tape& t, const LayerVars& p, nd::Var alpha, nd::Var unknown_mean);

/// The four n×hidden messages of the layer.
GroupMessages group_messages(nd::Tape& t, const GroupPartition& partition, nd::Var h,
                             const LayerVars& p, nd::Var alpha);

/// layer_norm(relu(concat(self, fr, be, un) · W_cᵀ)).
nd::Var fuse(nd::Tape& t, const LayerVars& p, const GroupMessages& m);

/// h_new + h_prev, or h_new + P_res · h_prev when widths differ.
nd::Var residual_complete(nd::Tape& t, nd::Var h_new, nd::Var h_prev, const LayerVars& p);

/// Full layer. `partition` must outlive the tape.
nd::Var layer_forward(nd::Tape& t, const GroupPartition& partition, nd::Var h, const LayerVars& p);

/// Per-group neighbor means of `h`, outside any tape.
struct GroupMeans {
  nd::Matrix fraud, benign, unknown;
};
GroupMeans group_means(const GroupPartition& partition, const nd::Matrix& h);

/// Largest singular value by power iteration on WᵀW.
double spectral_norm(const nd::Matrix& w, int max_iterations = 100000, double tol = 1e-12);

struct NormBound {
  double mixed_norm;  // ‖alpha W_fr + (1 − alpha) W_be‖₂
  double bound;       // alpha ‖W_fr‖₂ + (1 − alpha) ‖W_be‖₂
};
NormBound norm_bound_check(const nd::Matrix& w_fraud, const nd::Matrix& w_benign, double alpha);
NormBound norm_bound_check(const FgcLayerParams& params, double alpha);

}  // namespace fgc
