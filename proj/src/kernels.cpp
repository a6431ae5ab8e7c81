#include "fgc/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <vector>

#if defined(FGC_HAVE_OPENMP)
#include <omp.h>
#endif

namespace fgc::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// Below these sizes thread start-up dominates.
constexpr std::size_t kGemmParallelWork = 1u << 15;
constexpr std::size_t kSegmentParallelRows = 256;
constexpr std::size_t kColumnBlock = 8;

bool use_parallel(std::size_t work, std::size_t threshold) {
  return openmp_available() && g_parallel.load(std::memory_order_relaxed) && work >= threshold;
}

}  // namespace

namespace serial {

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
      c[i * m + j] = s;
    }
  }
}

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * m + j];
      c[i * m + j] = s;
    }
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t k, std::size_t n, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < k; ++r) s += a[r * n + i] * b[r * m + j];
      c[i * m + j] = s;
    }
  }
}

void segment_mean(std::span<const double> h, std::size_t cols, Segments seg,
                  std::span<double> out) {
  for (std::size_t i = 0; i < seg.count(); ++i) {
    const std::size_t begin = seg.offsets[i];
    const std::size_t end = seg.offsets[i + 1];
    const auto cnt = static_cast<double>(end - begin);
    for (std::size_t c = 0; c < cols; ++c) {
      double s = 0.0;
      for (std::size_t e = begin; e < end; ++e) s += h[seg.indices[e] * cols + c];
      out[i * cols + c] = end > begin ? s / cnt : 0.0;
    }
  }
}

void segment_mean_backward(std::span<const double> grad_out, std::size_t cols, Segments seg,
                           std::span<double> grad_h) {
  for (std::size_t i = 0; i < seg.count(); ++i) {
    const std::size_t begin = seg.offsets[i];
    const std::size_t end = seg.offsets[i + 1];
    if (begin == end) continue;
    const auto cnt = static_cast<double>(end - begin);
    for (std::size_t e = begin; e < end; ++e) {
      const std::size_t j = seg.indices[e];
      for (std::size_t c = 0; c < cols; ++c) grad_h[j * cols + c] += grad_out[i * cols + c] / cnt;
    }
  }
}

}  // namespace serial

namespace parallel {

namespace {

// C (n×m) = A · B where A(i, p) = a[i·row_stride + p·col_stride] and B is a
// dense k×m panel. Tiles of 2 rows × 8 columns stay in registers across the
// whole p loop; every element still sums p = 0..k-1 in order starting from 0.
void panel_gemm(const double* a, std::size_t row_stride, std::size_t col_stride,
                const double* b, double* c, std::size_t n, std::size_t k, std::size_t m) {
  constexpr std::size_t kTileCols = 8;
  const auto pairs = static_cast<std::int64_t>((n + 1) / 2);
#pragma omp parallel for schedule(static)
  for (std::int64_t ip = 0; ip < pairs; ++ip) {
    const std::size_t i0 = static_cast<std::size_t>(ip) * 2;
    const bool two = i0 + 1 < n;
    const double* a0 = a + i0 * row_stride;
    const double* a1 = two ? a + (i0 + 1) * row_stride : a0;
    std::size_t j0 = 0;
    for (; j0 + kTileCols <= m; j0 += kTileCols) {
      double acc0[kTileCols] = {};
      double acc1[kTileCols] = {};
      for (std::size_t p = 0; p < k; ++p) {
        const double x0 = a0[p * col_stride];
        const double x1 = a1[p * col_stride];
        const double* bp = b + p * m + j0;
        for (std::size_t jj = 0; jj < kTileCols; ++jj) {
          acc0[jj] += x0 * bp[jj];
          acc1[jj] += x1 * bp[jj];
        }
      }
      for (std::size_t jj = 0; jj < kTileCols; ++jj) c[i0 * m + j0 + jj] = acc0[jj];
      if (two)
        for (std::size_t jj = 0; jj < kTileCols; ++jj) c[(i0 + 1) * m + j0 + jj] = acc1[jj];
    }
    for (std::size_t j = j0; j < m; ++j) {
      double s0 = 0.0;
      double s1 = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        s0 += a0[p * col_stride] * b[p * m + j];
        s1 += a1[p * col_stride] * b[p * m + j];
      }
      c[i0 * m + j] = s0;
      if (two) c[(i0 + 1) * m + j] = s1;
    }
  }
}

}  // namespace

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m) {
  std::vector<double> bt(k * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * m + j] = b[j * k + p];
  panel_gemm(a.data(), k, 1, bt.data(), c.data(), n, k, m);
}

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m) {
  panel_gemm(a.data(), k, 1, b.data(), c.data(), n, k, m);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t k, std::size_t n, std::size_t m) {
  panel_gemm(a.data(), 1, n, b.data(), c.data(), n, k, m);
}

void segment_mean(std::span<const double> h, std::size_t cols, Segments seg,
                  std::span<double> out) {
  const auto rows = static_cast<std::int64_t>(seg.count());
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const std::size_t begin = seg.offsets[i];
    const std::size_t end = seg.offsets[i + 1];
    double* oi = out.data() + i * cols;
    std::fill(oi, oi + cols, 0.0);
    for (std::size_t e = begin; e < end; ++e) {
      const double* hj = h.data() + static_cast<std::size_t>(seg.indices[e]) * cols;
      for (std::size_t c = 0; c < cols; ++c) oi[c] += hj[c];
    }
    if (end > begin) {
      const auto cnt = static_cast<double>(end - begin);
      for (std::size_t c = 0; c < cols; ++c) oi[c] = oi[c] / cnt;
    }
  }
}

void segment_mean_backward(std::span<const double> grad_out, std::size_t cols, Segments seg,
                           std::span<double> grad_h) {
  const auto blocks = static_cast<std::int64_t>((cols + kColumnBlock - 1) / kColumnBlock);
  const std::size_t n = seg.count();
#pragma omp parallel for schedule(static)
  for (std::int64_t bb = 0; bb < blocks; ++bb) {
    const std::size_t c0 = static_cast<std::size_t>(bb) * kColumnBlock;
    const std::size_t c1 = std::min(cols, c0 + kColumnBlock);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t begin = seg.offsets[i];
      const std::size_t end = seg.offsets[i + 1];
      if (begin == end) continue;
      const auto cnt = static_cast<double>(end - begin);
      for (std::size_t e = begin; e < end; ++e) {
        const std::size_t j = seg.indices[e];
        for (std::size_t c = c0; c < c1; ++c) grad_h[j * cols + c] += grad_out[i * cols + c] / cnt;
      }
    }
  }
}

}  // namespace parallel

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m) {
  if (use_parallel(n * k * m, kGemmParallelWork)) {
    parallel::gemm_nt(a, b, c, n, k, m);
  } else {
    serial::gemm_nt(a, b, c, n, k, m);
  }
}

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t n, std::size_t k, std::size_t m) {
  if (use_parallel(n * k * m, kGemmParallelWork)) {
    parallel::gemm_nn(a, b, c, n, k, m);
  } else {
    serial::gemm_nn(a, b, c, n, k, m);
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t k, std::size_t n, std::size_t m) {
  if (use_parallel(n * k * m, kGemmParallelWork)) {
    parallel::gemm_tn(a, b, c, k, n, m);
  } else {
    serial::gemm_tn(a, b, c, k, n, m);
  }
}

void segment_mean(std::span<const double> h, std::size_t cols, Segments seg,
                  std::span<double> out) {
  if (use_parallel(seg.count(), kSegmentParallelRows)) {
    parallel::segment_mean(h, cols, seg, out);
  } else {
    serial::segment_mean(h, cols, seg, out);
  }
}

void segment_mean_backward(std::span<const double> grad_out, std::size_t cols, Segments seg,
                           std::span<double> grad_h) {
  if (use_parallel(seg.count(), kSegmentParallelRows) && cols > kColumnBlock) {
    parallel::segment_mean_backward(grad_out, cols, seg, grad_h);
  } else {
    serial::segment_mean_backward(grad_out, cols, seg, grad_h);
  }
}

void set_parallel_enabled(bool enabled) noexcept { g_parallel.store(enabled); }
bool parallel_enabled() noexcept { return g_parallel.load(); }

bool openmp_available() noexcept {
#if defined(FGC_HAVE_OPENMP)
  return true;
#else
  return false;
#endif
}

int max_threads() noexcept {
#if defined(FGC_HAVE_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace fgc::kernels
