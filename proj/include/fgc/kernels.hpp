#pragma once

// Dense and sparse compute kernels behind the differentiable ops.
//
// Every kernel exists twice: a plain serial reference and an OpenMP variant
// that splits work over output rows. Both accumulate each output element in
// the same (ascending) order, so they agree bit for bit for any thread count.
// The unqualified entry points dispatch to the parallel variant when OpenMP is
// compiled in, enabled, and the problem is large enough.

#include <cstddef>
#include <cstdint>
#include <span>

namespace fgc::kernels {

/// Row offsets (n+1) and flat member indices of a CSR-style grouping.
struct Segments {
  std::span<const std::size_t> offsets;
  std::span<const std::uint32_t> indices;
  std::size_t count() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
};

namespace serial {
// c (n×m) = a (n×k) · bᵀ, with b stored m×k.
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m);
// c (n×m) = a (n×k) · b (k×m).
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m);
// c (n×m) = aᵀ · b, with a stored k×n and b stored k×m.
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t k, std::size_t n, std::size_t m);
// out[i] = mean of h rows listed in segment i, or zero for an empty segment.
void segment_mean(std::span<const double> h, std::size_t cols, Segments seg,
                  std::span<double> out);
// grad_h[j] += grad_out[i] / |segment i| for every member j of segment i.
void segment_mean_backward(std::span<const double> grad_out, std::size_t cols, Segments seg,
                           std::span<double> grad_h);
}  // namespace serial

namespace parallel {
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m);
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t k, std::size_t n, std::size_t m);
void segment_mean(std::span<const double> h, std::size_t cols, Segments seg,
                  std::span<double> out);
// Parallel over column blocks, so each thread scatters into disjoint columns.
void segment_mean_backward(std::span<const double> grad_out, std::size_t cols, Segments seg,
                           std::span<double> grad_h);
}  // namespace parallel

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m);
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t k, std::size_t n, std::size_t m);
void segment_mean(std::span<const double> h, std::size_t cols, Segments seg,
                  std::span<double> out);
void segment_mean_backward(std::span<const double> grad_out, std::size_t cols, Segments seg,
                           std::span<double> grad_h);

/// Process-wide switch for the dispatching entry points. Defaults to enabled.
void set_parallel_enabled(bool enabled) noexcept;
bool parallel_enabled() noexcept;
/// True when the OpenMP variants were compiled in.
bool openmp_available() noexcept;
int max_threads() noexcept;

}  // namespace fgc::kernels
