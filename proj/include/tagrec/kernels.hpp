#pragma once

#include <cstddef>

// Dense row-major numeric kernels in two flavours: `serial` is the reference
// and `parallel` splits rows across OpenMP threads. Both run the identical
// per-row code, so their results are bit-for-bit equal for any thread count.
namespace tagrec::kernels {

#define TAGREC_KERNEL_DECLS                                                                   \
  /* c[m,n] (+)= op(a) * op(b); op(a) is [m,k], op(b) is [k,n]. */                           \
  template <typename Real>                                                                    \
  void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,          \
            const Real* a, const Real* b, Real* c, bool accumulate);                          \
  template <typename Real>                                                                    \
  void softmax_rows(std::size_t rows, std::size_t cols, const Real* x, Real* y);              \
  /* xhat and rstd are kept for the backward pass. */                                         \
  template <typename Real>                                                                    \
  void layer_norm_rows(std::size_t rows, std::size_t cols, const Real* x, const Real* gain,    \
                       const Real* bias, Real eps, Real* y, Real* xhat, Real* rstd);          \
  template <typename Real>                                                                    \
  void gelu(std::size_t n, const Real* x, Real* y);                                           \
  /* gx += gy * gelu'(x) */                                                                   \
  template <typename Real>                                                                    \
  void gelu_backward(std::size_t n, const Real* x, const Real* gy, Real* gx);

namespace serial {
TAGREC_KERNEL_DECLS
}  // namespace serial

namespace parallel {
TAGREC_KERNEL_DECLS
}  // namespace parallel

#undef TAGREC_KERNEL_DECLS

// Work below this many multiply-adds stays on the calling thread.
inline constexpr std::size_t kParallelGemmThreshold = std::size_t{1} << 16;

}  // namespace tagrec::kernels
