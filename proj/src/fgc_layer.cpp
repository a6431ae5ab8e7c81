#include "fgc/fgc_layer.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace fgc {

using nd::Matrix;
using nd::Parameter;
using nd::Tape;
using nd::Var;

FgcLayerParams FgcLayerParams::init(std::size_t in_dim, std::size_t hidden, std::mt19937_64& rng,
                                    const std::string& prefix) {
  if (in_dim == 0 || hidden < 2) {
    throw std::invalid_argument("FgcLayerParams: need in_dim >= 1 and hidden >= 2");
  }
  FgcLayerParams p;
  p.in_dim = in_dim;
  p.hidden = hidden;
  p.w_self = Parameter(prefix + ".w_self", nd::glorot_uniform(hidden, in_dim, rng));
  p.w_fraud = Parameter(prefix + ".w_fraud", nd::glorot_uniform(hidden, in_dim, rng));
  p.w_benign = Parameter(prefix + ".w_benign", nd::glorot_uniform(hidden, in_dim, rng));
  p.w_fuse = Parameter(prefix + ".w_fuse", nd::glorot_uniform(hidden, 4 * hidden, rng));
  p.gate_q = Parameter(prefix + ".gate_q", Matrix(1, in_dim));
  p.gate_b = Parameter(prefix + ".gate_b", Matrix(1, 1));
  p.ln_gain = Parameter(prefix + ".ln_gain", Matrix(1, hidden, 1.0));
  p.ln_shift = Parameter(prefix + ".ln_shift", Matrix(1, hidden));
  if (in_dim != hidden) p.res_proj = Parameter(prefix + ".res_proj", Matrix(hidden, in_dim));
  return p;
}

std::vector<Parameter*> FgcLayerParams::parameters() {
  std::vector<Parameter*> out{&w_self, &w_fraud, &w_benign, &w_fuse,
                              &gate_q, &gate_b,  &ln_gain,  &ln_shift};
  if (res_proj) out.push_back(&*res_proj);
  return out;
}

LayerVars bind(Tape& t, FgcLayerParams& p) {
  LayerVars v{t.parameter(p.w_self),  t.parameter(p.w_fraud), t.parameter(p.w_benign),
              t.parameter(p.w_fuse),  t.parameter(p.gate_q),  t.parameter(p.gate_b),
              t.parameter(p.ln_gain), t.parameter(p.ln_shift), std::nullopt};
  if (p.res_proj) v.res_proj = t.parameter(*p.res_proj);
  return v;
}

Var gate_alpha(Tape& t, const LayerVars& p, Var h) {
  return nd::sigmoid(t, nd::add_row_bias(t, nd::linear(t, h, p.gate_q), p.gate_b));
}

Var mixed_unknown_apply(Tape& t, const LayerVars& p, Var alpha, Var unknown_mean) {
  Var as_fraud = nd::linear(t, unknown_mean, p.w_fraud);
  Var as_benign = nd::linear(t, unknown_mean, p.w_benign);
  return nd::convex_mix(t, alpha, as_fraud, as_benign);
}

GroupMessages group_messages(Tape& t, const GroupPartition& partition, Var h, const LayerVars& p,
                             Var alpha) {
  const std::size_t n = t.value(h).rows();
  for (const NeighborGroup* g : {&partition.fraud, &partition.benign, &partition.unknown}) {
    if (g->offsets.size() != n + 1) {
      throw std::invalid_argument("group_messages: partition does not match the node count");
    }
  }
  Var mean_fraud = nd::segment_mean(t, h, partition.fraud.segments());
  Var mean_benign = nd::segment_mean(t, h, partition.benign.segments());
  Var mean_unknown = nd::segment_mean(t, h, partition.unknown.segments());
  return GroupMessages{
      nd::linear(t, h, p.w_self),
      nd::linear(t, mean_fraud, p.w_fraud),
      nd::linear(t, mean_benign, p.w_benign),
      mixed_unknown_apply(t, p, alpha, mean_unknown),
  };
}

Var fuse(Tape& t, const LayerVars& p, const GroupMessages& m) {
  const std::array<Var, 4> parts{m.self, m.fraud, m.benign, m.unknown};
  Var z = nd::linear(t, nd::concat_cols(t, parts), p.w_fuse);
  return nd::layer_norm(t, nd::relu(t, z), p.ln_gain, p.ln_shift);
}

Var residual_complete(Tape& t, Var h_new, Var h_prev, const LayerVars& p) {
  if (t.value(h_new).cols() == t.value(h_prev).cols() && !p.res_proj) {
    return nd::add(t, h_new, h_prev);
  }
  if (!p.res_proj) {
    throw std::invalid_argument("residual_complete: width change needs a projection");
  }
  return nd::add(t, h_new, nd::linear(t, h_prev, *p.res_proj));
}

Var layer_forward(Tape& t, const GroupPartition& partition, Var h, const LayerVars& p) {
  Var alpha = gate_alpha(t, p, h);
  GroupMessages m = group_messages(t, partition, h, p, alpha);
  return residual_complete(t, fuse(t, p, m), h, p);
}

GroupMeans group_means(const GroupPartition& partition, const Matrix& h) {
  auto one = [&](const NeighborGroup& g) {
    Matrix out(g.offsets.size() - 1, h.cols());
    kernels::segment_mean(h.data(), h.cols(), g.segments(), out.data());
    return out;
  };
  return {one(partition.fraud), one(partition.benign), one(partition.unknown)};
}

double spectral_norm(const Matrix& w, int max_iterations, double tol) {
  const std::size_t rows = w.rows(), cols = w.cols();
  if (w.empty()) return 0.0;
  std::vector<double> v(cols), wv(rows), next(cols);
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  for (auto& x : v) x = dist(rng);

  auto normalize = [](std::vector<double>& x) {
    double s = 0;
    for (double e : x) s += e * e;
    s = std::sqrt(s);
    if (s > 0)
      for (double& e : x) e /= s;
    return s;
  };
  normalize(v);
  for (int it = 0; it < max_iterations; ++it) {
    kernels::serial::gemm_nn(w.data(), v, wv, rows, cols, 1);
    kernels::serial::gemm_tn(w.data(), wv, next, rows, cols, 1);
    // Stop on the eigen-residual of WᵀW, which bounds the eigenvalue error
    // even when the top two singular values are close.
    double lambda = 0;
    for (std::size_t i = 0; i < cols; ++i) lambda += v[i] * next[i];
    double residual = 0;
    for (std::size_t i = 0; i < cols; ++i) residual += (next[i] - lambda * v[i]) * (next[i] - lambda * v[i]);
    if (normalize(next) == 0.0) return 0.0;
    v.swap(next);
    if (std::sqrt(residual) <= tol * lambda) break;
  }
  // ‖W v‖ for unit v never exceeds the true norm.
  kernels::serial::gemm_nn(w.data(), v, wv, rows, cols, 1);
  double s = 0;
  for (double e : wv) s += e * e;
  return std::sqrt(s);
}

NormBound norm_bound_check(const Matrix& w_fraud, const Matrix& w_benign, double alpha) {
  nd::require_same_shape(w_fraud, w_benign, "norm_bound_check");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  Matrix mixed(w_fraud.rows(), w_fraud.cols());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    mixed[i] = alpha * w_fraud[i] + (1.0 - alpha) * w_benign[i];
  }
  return {spectral_norm(mixed),
          alpha * spectral_norm(w_fraud) + (1.0 - alpha) * spectral_norm(w_benign)};
}

NormBound norm_bound_check(const FgcLayerParams& params, double alpha) {
  return norm_bound_check(params.w_fraud.value, params.w_benign.value, alpha);
}

}  // namespace fgc
