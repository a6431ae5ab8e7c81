#include "fgc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fgc::nd {

namespace {

void add_into(Matrix& dst, const Matrix& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape_string() +
                              " and " + b.shape_string());
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var matmul(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
  Matrix out(n, m);
  kernels::gemm_nn(av.data(), bv.data(), out.data(), n, k, m);
  return t.record(std::move(out), {a, b}, [a, b, n, k, m](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) {
      Matrix da(n, k);
      kernels::gemm_nt(g.data(), t.value(b).data(), da.data(), n, m, k);
      add_into(t.grad_buffer(a), da);
    }
    if (t.requires_grad(b)) {
      Matrix db(k, m);
      kernels::gemm_tn(t.value(a).data(), g.data(), db.data(), n, k, m);
      add_into(t.grad_buffer(b), db);
    }
  });
}

Var linear(Tape& t, Var x, Var w) {
  const Matrix& xv = t.value(x);
  const Matrix& wv = t.value(w);
  if (xv.cols() != wv.cols()) shape_error("linear", xv, wv);
  const std::size_t n = xv.rows(), in = xv.cols(), out_dim = wv.rows();
  Matrix out(n, out_dim);
  kernels::gemm_nt(xv.data(), wv.data(), out.data(), n, in, out_dim);
  return t.record(std::move(out), {x, w}, [x, w, n, in, out_dim](Tape& t, const Matrix& g) {
    if (t.requires_grad(x)) {
      Matrix dx(n, in);
      kernels::gemm_nn(g.data(), t.value(w).data(), dx.data(), n, out_dim, in);
      add_into(t.grad_buffer(x), dx);
    }
    if (t.requires_grad(w)) {
      Matrix dw(out_dim, in);
      kernels::gemm_tn(g.data(), t.value(x).data(), dw.data(), n, out_dim, in);
      add_into(t.grad_buffer(w), dw);
    }
  });
}

Var add(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (!av.same_shape(bv)) shape_error("add", av, bv);
  Matrix out = av;
  add_into(out, bv);
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) add_into(t.grad_buffer(a), g);
    if (t.requires_grad(b)) add_into(t.grad_buffer(b), g);
  });
}

Var add_row_bias(Tape& t, Var x, Var bias) {
  const Matrix& xv = t.value(x);
  const Matrix& bv = t.value(bias);
  if (bv.rows() != 1 || bv.cols() != xv.cols()) shape_error("add_row_bias", xv, bv);
  Matrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
  return t.record(std::move(out), {x, bias}, [x, bias](Tape& t, const Matrix& g) {
    if (t.requires_grad(x)) add_into(t.grad_buffer(x), g);
    if (t.requires_grad(bias)) {
      Matrix& db = t.grad_buffer(bias);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) db(0, c) += g(r, c);
    }
  });
}

Var scale(Tape& t, Var x, double s) {
  Matrix out = t.value(x);
  for (auto& v : out.data()) v *= s;
  return t.record(std::move(out), {x}, [x, s](Tape& t, const Matrix& g) {
    Matrix& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += s * g[i];
  });
}

Var sigmoid(Tape& t, Var x) {
  Matrix out = t.value(x);
  for (auto& v : out.data()) v = sigmoid(v);
  return t.record(std::move(out), {x}, [x](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    Matrix& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = sigmoid(xv[i]);
      dx[i] += g[i] * s * (1.0 - s);
    }
  });
}

Var relu(Tape& t, Var x) {
  Matrix out = t.value(x);
  for (auto& v : out.data()) v = v > 0 ? v : 0.0;
  return t.record(std::move(out), {x}, [x](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    Matrix& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv[i] > 0) dx[i] += g[i];
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t n = t.value(parts[0]).rows();
  std::size_t width = 0;
  std::vector<std::size_t> starts;
  for (Var p : parts) {
    const Matrix& v = t.value(p);
    if (v.rows() != n) shape_error("concat_cols", t.value(parts[0]), v);
    starts.push_back(width);
    width += v.cols();
  }
  Matrix out(n, width);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Matrix& v = t.value(parts[k]);
    for (std::size_t r = 0; r < n; ++r)
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + starts[k]);
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(out), inputs, [inputs, starts](Tape& t, const Matrix& g) {
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (!t.requires_grad(inputs[k])) continue;
      Matrix& d = t.grad_buffer(inputs[k]);
      for (std::size_t r = 0; r < d.rows(); ++r)
        for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) += g(r, starts[k] + c);
    }
  });
}

Var layer_norm(Tape& t, Var x, Var gain, Var shift, double eps) {
  const Matrix& xv = t.value(x);
  const std::size_t n = xv.rows(), d = xv.cols();
  if (d < 2) throw std::invalid_argument("layer_norm: needs at least 2 columns");
  const Matrix& gv = t.value(gain);
  const Matrix& sv = t.value(shift);
  if (gv.rows() != 1 || gv.cols() != d) shape_error("layer_norm gain", xv, gv);
  if (sv.rows() != 1 || sv.cols() != d) shape_error("layer_norm shift", xv, sv);

  Matrix xhat(n, d);
  std::vector<double> rstd(n);
  Matrix out(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    double mean = 0;
    for (double v : xv.row(r)) mean += v;
    mean /= static_cast<double>(d);
    double var = 0;
    for (double v : xv.row(r)) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      xhat(r, c) = (xv(r, c) - mean) * rstd[r];
      out(r, c) = xhat(r, c) * gv(0, c) + sv(0, c);
    }
  }
  return t.record(std::move(out), {x, gain, shift},
                  [x, gain, shift, xhat = std::move(xhat), rstd = std::move(rstd)](
                      Tape& t, const Matrix& g) {
                    const std::size_t n = g.rows(), d = g.cols();
                    const Matrix& gv = t.value(gain);
                    if (t.requires_grad(gain)) {
                      Matrix& dg = t.grad_buffer(gain);
                      for (std::size_t r = 0; r < n; ++r)
                        for (std::size_t c = 0; c < d; ++c) dg(0, c) += g(r, c) * xhat(r, c);
                    }
                    if (t.requires_grad(shift)) {
                      Matrix& ds = t.grad_buffer(shift);
                      for (std::size_t r = 0; r < n; ++r)
                        for (std::size_t c = 0; c < d; ++c) ds(0, c) += g(r, c);
                    }
                    if (!t.requires_grad(x)) return;
                    Matrix& dx = t.grad_buffer(x);
                    std::vector<double> dxhat(d);
                    for (std::size_t r = 0; r < n; ++r) {
                      double mean_d = 0, mean_dx = 0;
                      for (std::size_t c = 0; c < d; ++c) {
                        dxhat[c] = g(r, c) * gv(0, c);
                        mean_d += dxhat[c];
                        mean_dx += dxhat[c] * xhat(r, c);
                      }
                      mean_d /= static_cast<double>(d);
                      mean_dx /= static_cast<double>(d);
                      for (std::size_t c = 0; c < d; ++c)
                        dx(r, c) += rstd[r] * (dxhat[c] - mean_d - xhat(r, c) * mean_dx);
                    }
                  });
}

Var convex_mix(Tape& t, Var alpha, Var a, Var b) {
  const Matrix& al = t.value(alpha);
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (!av.same_shape(bv)) shape_error("convex_mix", av, bv);
  if (al.rows() != av.rows() || al.cols() != 1) shape_error("convex_mix alpha", al, av);
  Matrix out(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    const double w = al(r, 0);
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = w * av(r, c) + (1.0 - w) * bv(r, c);
  }
  return t.record(std::move(out), {alpha, a, b}, [alpha, a, b](Tape& t, const Matrix& g) {
    const Matrix& al = t.value(alpha);
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    if (t.requires_grad(alpha)) {
      Matrix& dal = t.grad_buffer(alpha);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        double s = 0;
        for (std::size_t c = 0; c < g.cols(); ++c) s += g(r, c) * (av(r, c) - bv(r, c));
        dal(r, 0) += s;
      }
    }
    if (t.requires_grad(a)) {
      Matrix& da = t.grad_buffer(a);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) da(r, c) += al(r, 0) * g(r, c);
    }
    if (t.requires_grad(b)) {
      Matrix& db = t.grad_buffer(b);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) db(r, c) += (1.0 - al(r, 0)) * g(r, c);
    }
  });
}

Var segment_mean(Tape& t, Var h, kernels::Segments segments) {
  const Matrix& hv = t.value(h);
  for (std::uint32_t j : segments.indices) {
    if (j >= hv.rows()) throw std::invalid_argument("segment_mean: member index out of range");
  }
  Matrix out(segments.count(), hv.cols());
  kernels::segment_mean(hv.data(), hv.cols(), segments, out.data());
  return t.record(std::move(out), {h}, [h, segments](Tape& t, const Matrix& g) {
    Matrix& dh = t.grad_buffer(h);
    kernels::segment_mean_backward(g.data(), g.cols(), segments, dh.data());
  });
}

Var sum_squares(Tape& t, Var x) {
  double s = 0;
  for (double v : t.value(x).data()) s += v * v;
  return t.record(Matrix(1, 1, s), {x}, [x](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    Matrix& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < xv.size(); ++i) dx[i] += 2.0 * xv[i] * g(0, 0);
  });
}

Var bce_with_logits(Tape& t, Var logits, std::span<const std::uint8_t> targets,
                    std::span<const std::uint32_t> nodes, double pos_weight) {
  const Matrix& z = t.value(logits);
  if (z.cols() != 1) throw std::invalid_argument("bce_with_logits: logits must be n x 1");
  if (nodes.empty()) throw std::invalid_argument("bce_with_logits: empty supervision set");
  if (targets.size() != z.rows()) {
    throw std::invalid_argument("bce_with_logits: target length does not match logits");
  }
  std::vector<std::uint32_t> idx(nodes.begin(), nodes.end());
  std::vector<std::uint8_t> y(idx.size());
  double total = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= z.rows()) throw std::invalid_argument("bce_with_logits: node out of range");
    y[k] = targets[idx[k]];
    const double zi = z(idx[k], 0);
    total += y[k] ? pos_weight * softplus(-zi) : softplus(zi);
  }
  const auto count = static_cast<double>(idx.size());
  return t.record(Matrix(1, 1, total / count), {logits},
                  [logits, idx = std::move(idx), y = std::move(y), pos_weight, count](
                      Tape& t, const Matrix& g) {
                    const Matrix& z = t.value(logits);
                    Matrix& dz = t.grad_buffer(logits);
                    for (std::size_t k = 0; k < idx.size(); ++k) {
                      const double s = sigmoid(z(idx[k], 0));
                      const double d = y[k] ? pos_weight * (s - 1.0) : s;
                      dz(idx[k], 0) += g(0, 0) * d / count;
                    }
                  });
}

double bce_loss(std::span<const double> probs, std::span<const std::uint8_t> targets) {
  if (probs.empty()) throw std::invalid_argument("bce_loss: empty supervision set");
  if (probs.size() != targets.size()) throw std::invalid_argument("bce_loss: length mismatch");
  double total = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kBceClamp, 1.0 - kBceClamp);
    total -= targets[i] ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

}  // namespace fgc::nd
