#include "tagrec/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tagrec::kernels {
namespace {

// Register tile: kTileRows rows of c times kTileCols<Real> columns.
constexpr std::size_t kTileRows = 4;
template <typename Real>
constexpr std::size_t kTileCols = 256 / sizeof(Real);

template <typename Real>
inline Real a_at(bool trans_a, std::size_t m, std::size_t k, const Real* a, std::size_t i,
                 std::size_t p) {
  return trans_a ? a[p * m + i] : a[i * k + p];
}

// Rows [i0, i0 + R) and columns [j0, j0 + W) of c. Every element is
// accumulated over p in ascending order, whatever the tile shape.
template <typename Real, std::size_t R, std::size_t W>
inline void gemm_tile(std::size_t i0, std::size_t j0, bool trans_a, std::size_t m, std::size_t n,
                      std::size_t k, const Real* a, const Real* b, Real* c, bool accumulate) {
  alignas(64) Real acc[R][W];
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t j = 0; j < W; ++j) acc[r][j] = accumulate ? c[(i0 + r) * n + j0 + j] : Real(0);
  }
  for (std::size_t p = 0; p < k; ++p) {
    const Real* __restrict brow = b + p * n + j0;
    Real ar[R];
    for (std::size_t r = 0; r < R; ++r) ar[r] = a_at(trans_a, m, k, a, i0 + r, p);
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t j = 0; j < W; ++j) acc[r][j] += ar[r] * brow[j];
    }
  }
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t j = 0; j < W; ++j) c[(i0 + r) * n + j0 + j] = acc[r][j];
  }
}

// Ragged edge: same accumulation order as gemm_tile, runtime extents.
template <typename Real>
inline void gemm_edge(std::size_t i0, std::size_t rows, std::size_t j0, std::size_t cols,
                      bool trans_a, std::size_t m, std::size_t n, std::size_t k, const Real* a,
                      const Real* b, Real* c, bool accumulate) {
  for (std::size_t r = 0; r < rows; ++r) {
    Real* __restrict crow = c + (i0 + r) * n + j0;
    if (!accumulate) std::fill(crow, crow + cols, Real(0));
    for (std::size_t p = 0; p < k; ++p) {
      const Real ap = a_at(trans_a, m, k, a, i0 + r, p);
      const Real* __restrict brow = b + p * n + j0;
      for (std::size_t j = 0; j < cols; ++j) crow[j] += ap * brow[j];
    }
  }
}

// One band of at most kTileRows rows starting at i0. b is [k, n] row-major.
template <typename Real>
inline void gemm_band(std::size_t i0, bool trans_a, std::size_t m, std::size_t n, std::size_t k,
                      const Real* a, const Real* b, Real* c, bool accumulate) {
  constexpr std::size_t W = kTileCols<Real>;
  const std::size_t rows = std::min(kTileRows, m - i0);
  std::size_t j0 = 0;
  if (rows == kTileRows) {
    for (; j0 + W <= n; j0 += W) {
      gemm_tile<Real, kTileRows, W>(i0, j0, trans_a, m, n, k, a, b, c, accumulate);
    }
  }
  if (j0 < n) gemm_edge(i0, rows, j0, n - j0, trans_a, m, n, k, a, b, c, accumulate);
}

template <typename Real>
std::vector<Real> transposed(const Real* b, std::size_t rows, std::size_t cols) {
  std::vector<Real> t(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = b[r * cols + c];
  }
  return t;
}

template <typename Real>
inline void softmax_row(std::size_t cols, const Real* x, Real* y) {
  Real mx = -std::numeric_limits<Real>::infinity();
  for (std::size_t j = 0; j < cols; ++j) mx = std::max(mx, x[j]);
  Real sum = 0;
  for (std::size_t j = 0; j < cols; ++j) {
    y[j] = std::exp(x[j] - mx);
    sum += y[j];
  }
  const Real inv = Real(1) / sum;
  for (std::size_t j = 0; j < cols; ++j) y[j] *= inv;
}

template <typename Real>
inline void layer_norm_row(std::size_t cols, const Real* x, const Real* gain, const Real* bias,
                           Real eps, Real* y, Real* xhat, Real& rstd) {
  Real mean = 0;
  for (std::size_t j = 0; j < cols; ++j) mean += x[j];
  mean /= static_cast<Real>(cols);
  Real var = 0;
  for (std::size_t j = 0; j < cols; ++j) var += (x[j] - mean) * (x[j] - mean);
  var /= static_cast<Real>(cols);
  rstd = Real(1) / std::sqrt(var + eps);
  for (std::size_t j = 0; j < cols; ++j) {
    xhat[j] = (x[j] - mean) * rstd;
    y[j] = xhat[j] * gain[j] + bias[j];
  }
}

// Tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
template <typename Real>
inline Real gelu_value(Real x) {
  constexpr Real kC = Real(0.7978845608028654);
  const Real u = kC * (x + Real(0.044715) * x * x * x);
  return Real(0.5) * x * (Real(1) + std::tanh(u));
}

template <typename Real>
inline Real gelu_derivative(Real x) {
  constexpr Real kC = Real(0.7978845608028654);
  const Real u = kC * (x + Real(0.044715) * x * x * x);
  const Real t = std::tanh(u);
  return Real(0.5) * (Real(1) + t) +
         Real(0.5) * x * (Real(1) - t * t) * kC * (Real(1) + Real(3 * 0.044715) * x * x);
}

}  // namespace

namespace serial {

template <typename Real>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const Real* a,
          const Real* b, Real* c, bool accumulate) {
  std::vector<Real> bt;
  if (trans_b) {
    bt = transposed(b, n, k);
    b = bt.data();
  }
  for (std::size_t i0 = 0; i0 < m; i0 += kTileRows) gemm_band(i0, trans_a, m, n, k, a, b, c, accumulate);
}

template <typename Real>
void softmax_rows(std::size_t rows, std::size_t cols, const Real* x, Real* y) {
  for (std::size_t r = 0; r < rows; ++r) softmax_row(cols, x + r * cols, y + r * cols);
}

template <typename Real>
void layer_norm_rows(std::size_t rows, std::size_t cols, const Real* x, const Real* gain,
                     const Real* bias, Real eps, Real* y, Real* xhat, Real* rstd) {
  for (std::size_t r = 0; r < rows; ++r) {
    layer_norm_row(cols, x + r * cols, gain, bias, eps, y + r * cols, xhat + r * cols, rstd[r]);
  }
}

template <typename Real>
void gelu(std::size_t n, const Real* x, Real* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = gelu_value(x[i]);
}

template <typename Real>
void gelu_backward(std::size_t n, const Real* x, const Real* gy, Real* gx) {
  for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i] * gelu_derivative(x[i]);
}

}  // namespace serial

namespace parallel {

template <typename Real>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const Real* a,
          const Real* b, Real* c, bool accumulate) {
  std::vector<Real> bt;
  if (trans_b) {
    bt = transposed(b, n, k);
    b = bt.data();
  }
  const auto bands = static_cast<std::ptrdiff_t>((m + kTileRows - 1) / kTileRows);
#pragma omp parallel for schedule(static) if (m * n * k >= kParallelGemmThreshold)
  for (std::ptrdiff_t t = 0; t < bands; ++t) {
    gemm_band(static_cast<std::size_t>(t) * kTileRows, trans_a, m, n, k, a, b, c, accumulate);
  }
}

template <typename Real>
void softmax_rows(std::size_t rows, std::size_t cols, const Real* x, Real* y) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= (1u << 14))
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto off = static_cast<std::size_t>(r) * cols;
    softmax_row(cols, x + off, y + off);
  }
}

template <typename Real>
void layer_norm_rows(std::size_t rows, std::size_t cols, const Real* x, const Real* gain,
                     const Real* bias, Real eps, Real* y, Real* xhat, Real* rstd) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= (1u << 14))
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto off = static_cast<std::size_t>(r) * cols;
    layer_norm_row(cols, x + off, gain, bias, eps, y + off, xhat + off,
                   rstd[static_cast<std::size_t>(r)]);
  }
}

template <typename Real>
void gelu(std::size_t n, const Real* x, Real* y) {
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n >= (1u << 15))
  for (std::ptrdiff_t i = 0; i < count; ++i) y[i] = gelu_value(x[i]);
}

template <typename Real>
void gelu_backward(std::size_t n, const Real* x, const Real* gy, Real* gx) {
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n >= (1u << 15))
  for (std::ptrdiff_t i = 0; i < count; ++i) gx[i] += gy[i] * gelu_derivative(x[i]);
}

}  // namespace parallel

#define TAGREC_INSTANTIATE(NS, Real)                                                           \
  template void NS::gemm<Real>(bool, bool, std::size_t, std::size_t, std::size_t, const Real*, \
                               const Real*, Real*, bool);                                      \
  template void NS::softmax_rows<Real>(std::size_t, std::size_t, const Real*, Real*);          \
  template void NS::layer_norm_rows<Real>(std::size_t, std::size_t, const Real*, const Real*,  \
                                          const Real*, Real, Real*, Real*, Real*);             \
  template void NS::gelu<Real>(std::size_t, const Real*, Real*);                               \
  template void NS::gelu_backward<Real>(std::size_t, const Real*, const Real*, Real*);

TAGREC_INSTANTIATE(serial, float)
TAGREC_INSTANTIATE(serial, double)
TAGREC_INSTANTIATE(parallel, float)
TAGREC_INSTANTIATE(parallel, double)

#undef TAGREC_INSTANTIATE

}  // namespace tagrec::kernels
