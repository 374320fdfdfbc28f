#include "tagrec/ops.hpp"

#include <algorithm>
#include <cmath>

#include "tagrec/errors.hpp"
#include "tagrec/kernels.hpp"

namespace tagrec::ops {
namespace kp = kernels::parallel;

namespace {

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                   shape_string(b));
}

template <typename Real>
void accumulate(Tensor<Real>& dst, const Tensor<Real>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

template <typename Real>
Var matmul(Tape<Real>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) mismatch("matmul", A.shape, B.shape);
  Tensor<Real> C({m, n});
  kp::gemm(false, false, m, n, k, A.data.data(), B.data.data(), C.data.data(), false);
  return t.record(std::move(C), {a, b}, [a, b, m, n, k](Tape<Real>& t, Var self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(a)) {
      kp::gemm(false, true, m, k, n, g.data.data(), t.value(b).data.data(), t.grad(a).data.data(), true);
    }
    if (t.needs_grad(b)) {
      kp::gemm(true, false, k, n, m, t.value(a).data.data(), g.data.data(), t.grad(b).data.data(), true);
    }
  });
}

template <typename Real>
Var matmul_bt(Tape<Real>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
  if (B.cols() != k) mismatch("matmul_bt", A.shape, B.shape);
  Tensor<Real> C({m, n});
  kp::gemm(false, true, m, n, k, A.data.data(), B.data.data(), C.data.data(), false);
  return t.record(std::move(C), {a, b}, [a, b, m, n, k](Tape<Real>& t, Var self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(a)) {
      kp::gemm(false, false, m, k, n, g.data.data(), t.value(b).data.data(), t.grad(a).data.data(), true);
    }
    if (t.needs_grad(b)) {
      kp::gemm(true, false, n, k, m, g.data.data(), t.value(a).data.data(), t.grad(b).data.data(), true);
    }
  });
}

template <typename Real>
Var add(Tape<Real>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  const bool same = A.shape == B.shape;
  const bool row_broadcast = !same && B.rows() == 1 && B.cols() == A.cols();
  if (!same && !row_broadcast) mismatch("add", A.shape, B.shape);
  Tensor<Real> C = A;
  const std::size_t cols = A.cols();
  for (std::size_t i = 0; i < C.size(); ++i) C.data[i] += B.data[same ? i : i % cols];
  return t.record(std::move(C), {a, b}, [a, b, same, cols](Tape<Real>& t, Var self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(a)) accumulate(t.grad(a), g);
    if (t.needs_grad(b)) {
      auto& gb = t.grad(b);
      if (same) {
        accumulate(gb, g);
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) gb.data[i % cols] += g.data[i];
      }
    }
  });
}

template <typename Real>
Var mul(Tape<Real>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (A.shape != B.shape) mismatch("mul", A.shape, B.shape);
  Tensor<Real> C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C.data[i] *= B.data[i];
  return t.record(std::move(C), {a, b}, [a, b](Tape<Real>& t, Var self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(a)) {
      auto& ga = t.grad(a);
      const auto& vb = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * vb.data[i];
    }
    if (t.needs_grad(b)) {
      auto& gb = t.grad(b);
      const auto& va = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * va.data[i];
    }
  });
}

template <typename Real>
Var scale(Tape<Real>& t, Var a, Real factor) {
  Tensor<Real> C = t.value(a);
  for (auto& v : C.data) v *= factor;
  return t.record(std::move(C), {a}, [a, factor](Tape<Real>& t, Var self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += factor * g.data[i];
  });
}

template <typename Real>
Var add_scalar(Tape<Real>& t, Var a, Real offset) {
  Tensor<Real> C = t.value(a);
  for (auto& v : C.data) v += offset;
  return t.record(std::move(C), {a}, [a](Tape<Real>& t, Var self) {
    accumulate(t.grad(a), t.grad(self));
  });
}

template <typename Real>
Var softmax_rows(Tape<Real>& t, Var a) {
  const auto& A = t.value(a);
  const std::size_t rows = A.rows(), cols = A.cols();
  Tensor<Real> Y(A.shape);
  kp::softmax_rows(rows, cols, A.data.data(), Y.data.data());
  return t.record(std::move(Y), {a}, [a, rows, cols](Tape<Real>& t, Var self) {
    const auto& y = t.value(self);
    const auto& g = t.grad(self);
    auto& ga = t.grad(a);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t off = r * cols;
      Real dot = 0;
      for (std::size_t j = 0; j < cols; ++j) dot += g.data[off + j] * y.data[off + j];
      for (std::size_t j = 0; j < cols; ++j) {
        ga.data[off + j] += y.data[off + j] * (g.data[off + j] - dot);
      }
    }
  });
}

template <typename Real>
Var layer_norm(Tape<Real>& t, Var x, Var gain, Var bias, Real eps) {
  const auto& X = t.value(x);
  const auto& G = t.value(gain);
  const auto& B = t.value(bias);
  const std::size_t rows = X.rows(), cols = X.cols();
  if (G.size() != cols) mismatch("layer_norm(gain)", X.shape, G.shape);
  if (B.size() != cols) mismatch("layer_norm(bias)", X.shape, B.shape);
  Tensor<Real> Y(X.shape);
  std::vector<Real> xhat(X.size()), rstd(rows);
  kp::layer_norm_rows(rows, cols, X.data.data(), G.data.data(), B.data.data(), eps, Y.data.data(),
                      xhat.data(), rstd.data());
  return t.record(
      std::move(Y), {x, gain, bias},
      [x, gain, bias, rows, cols, xhat = std::move(xhat), rstd = std::move(rstd)](Tape<Real>& t,
                                                                                  Var self) {
        const auto& g = t.grad(self);
        const auto& gv = t.value(gain);
        if (t.needs_grad(gain)) {
          auto& gg = t.grad(gain);
          for (std::size_t i = 0; i < g.size(); ++i) gg.data[i % cols] += g.data[i] * xhat[i];
        }
        if (t.needs_grad(bias)) {
          auto& gb = t.grad(bias);
          for (std::size_t i = 0; i < g.size(); ++i) gb.data[i % cols] += g.data[i];
        }
        if (t.needs_grad(x)) {
          auto& gx = t.grad(x);
          const Real inv_n = Real(1) / static_cast<Real>(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t off = r * cols;
            Real mean_d = 0, mean_dx = 0;
            for (std::size_t j = 0; j < cols; ++j) {
              const Real d = g.data[off + j] * gv.data[j];
              mean_d += d;
              mean_dx += d * xhat[off + j];
            }
            mean_d *= inv_n;
            mean_dx *= inv_n;
            for (std::size_t j = 0; j < cols; ++j) {
              const Real d = g.data[off + j] * gv.data[j];
              gx.data[off + j] += rstd[r] * (d - mean_d - xhat[off + j] * mean_dx);
            }
          }
        }
      });
}

template <typename Real>
Var gelu(Tape<Real>& t, Var a) {
  const auto& A = t.value(a);
  Tensor<Real> Y(A.shape);
  kp::gelu(A.size(), A.data.data(), Y.data.data());
  return t.record(std::move(Y), {a}, [a](Tape<Real>& t, Var self) {
    const auto& g = t.grad(self);
    kp::gelu_backward(g.size(), t.value(a).data.data(), g.data.data(), t.grad(a).data.data());
  });
}

template <typename Real>
Var sigmoid(Tape<Real>& t, Var a) {
  Tensor<Real> Y = t.value(a);
  for (auto& v : Y.data) {
    if (v >= 0) {
      v = Real(1) / (Real(1) + std::exp(-v));
    } else {
      const Real e = std::exp(v);
      v = e / (Real(1) + e);
    }
  }
  return t.record(std::move(Y), {a}, [a](Tape<Real>& t, Var self) {
    const auto& y = t.value(self);
    const auto& g = t.grad(self);
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.data[i] += g.data[i] * y.data[i] * (Real(1) - y.data[i]);
    }
  });
}

template <typename Real>
Var log(Tape<Real>& t, Var a) {
  Tensor<Real> Y = t.value(a);
  for (auto& v : Y.data) v = std::log(v);
  return t.record(std::move(Y), {a}, [a](Tape<Real>& t, Var self) {
    const auto& g = t.grad(self);
    const auto& x = t.value(a);
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] / x.data[i];
  });
}

template <typename Real>
Var clamp(Tape<Real>& t, Var a, Real lo, Real hi) {
  Tensor<Real> Y = t.value(a);
  for (auto& v : Y.data) v = std::clamp(v, lo, hi);
  return t.record(std::move(Y), {a}, [a, lo, hi](Tape<Real>& t, Var self) {
    const auto& g = t.grad(self);
    const auto& x = t.value(a);
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x.data[i] >= lo && x.data[i] <= hi) ga.data[i] += g.data[i];
    }
  });
}

template <typename Real>
Var sum(Tape<Real>& t, Var a) {
  Real total = 0;
  for (const Real v : t.value(a).data) total += v;
  return t.record(Tensor<Real>({1, 1}, {total}), {a}, [a](Tape<Real>& t, Var self) {
    const Real g = t.grad(self).data[0];
    for (auto& v : t.grad(a).data) v += g;
  });
}

template <typename Real>
Var embedding(Tape<Real>& t, Var table, std::span<const std::int32_t> ids) {
  const auto& W = t.value(table);
  const std::size_t vocab = W.rows(), dim = W.cols();
  Tensor<Real> Y({ids.size(), dim});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= vocab) {
      throw UsageError("embedding: id " + std::to_string(ids[r]) + " outside table of " +
                       std::to_string(vocab) + " rows");
    }
    std::copy_n(W.data.begin() + static_cast<std::ptrdiff_t>(ids[r] * dim), dim,
                Y.data.begin() + static_cast<std::ptrdiff_t>(r * dim));
  }
  return t.record(std::move(Y), {table},
                  [table, dim, ids = std::vector<std::int32_t>(ids.begin(), ids.end())](
                      Tape<Real>& t, Var self) {
                    const auto& g = t.grad(self);
                    auto& gw = t.grad(table);
                    for (std::size_t r = 0; r < ids.size(); ++r) {
                      Real* dst = gw.data.data() + static_cast<std::size_t>(ids[r]) * dim;
                      const Real* src = g.data.data() + r * dim;
                      for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
                    }
                  });
}

template <typename Real>
Var masked_mean(Tape<Real>& t, Var a, std::span<const std::uint8_t> mask) {
  const auto& A = t.value(a);
  const std::size_t rows = A.rows(), cols = A.cols();
  if (mask.size() != rows) mismatch("masked_mean", A.shape, Shape{mask.size()});
  const auto count = static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
  if (count == 0) throw UsageError("masked_mean: no unmasked positions");
  Tensor<Real> Y({1, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    if (mask[r] == 0) continue;
    for (std::size_t j = 0; j < cols; ++j) Y.data[j] += A.data[r * cols + j];
  }
  for (auto& v : Y.data) v /= static_cast<Real>(count);
  return t.record(std::move(Y), {a},
                  [a, cols, count, mask = std::vector<std::uint8_t>(mask.begin(), mask.end())](
                      Tape<Real>& t, Var self) {
                    const auto& g = t.grad(self);
                    auto& ga = t.grad(a);
                    for (std::size_t r = 0; r < mask.size(); ++r) {
                      if (mask[r] == 0) continue;
                      for (std::size_t j = 0; j < cols; ++j) {
                        ga.data[r * cols + j] += g.data[j] / static_cast<Real>(count);
                      }
                    }
                  });
}

template <typename Real>
Var masked_max(Tape<Real>& t, Var a, std::span<const std::uint8_t> mask) {
  const auto& A = t.value(a);
  const std::size_t rows = A.rows(), cols = A.cols();
  if (mask.size() != rows) mismatch("masked_max", A.shape, Shape{mask.size()});
  std::vector<std::size_t> argmax(cols, rows);
  Tensor<Real> Y({1, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    if (mask[r] == 0) continue;
    for (std::size_t j = 0; j < cols; ++j) {
      const Real v = A.data[r * cols + j];
      if (argmax[j] == rows || v > Y.data[j]) {
        Y.data[j] = v;
        argmax[j] = r;
      }
    }
  }
  if (cols > 0 && argmax[0] == rows) throw UsageError("masked_max: no unmasked positions");
  return t.record(std::move(Y), {a},
                  [a, cols, argmax = std::move(argmax)](Tape<Real>& t, Var self) {
                    const auto& g = t.grad(self);
                    auto& ga = t.grad(a);
                    for (std::size_t j = 0; j < cols; ++j) ga.data[argmax[j] * cols + j] += g.data[j];
                  });
}

template <typename Real>
Var concat_cols(Tape<Real>& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw UsageError("concat_cols: no inputs");
  const std::size_t rows = t.value(parts[0]).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var p : parts) {
    const auto& P = t.value(p);
    if (P.rows() != rows) mismatch("concat_cols", t.value(parts[0]).shape, P.shape);
    widths.push_back(P.cols());
    total += P.cols();
  }
  Tensor<Real> Y({rows, total});
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& P = t.value(parts[i]);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(P.data.begin() + static_cast<std::ptrdiff_t>(r * widths[i]), widths[i],
                  Y.data.begin() + static_cast<std::ptrdiff_t>(r * total + offset));
    }
    offset += widths[i];
  }
  return t.record(std::move(Y), parts,
                  [parts, widths, rows, total](Tape<Real>& t, Var self) {
                    const auto& g = t.grad(self);
                    std::size_t off = 0;
                    for (std::size_t i = 0; i < parts.size(); ++i) {
                      if (t.needs_grad(parts[i])) {
                        auto& gp = t.grad(parts[i]);
                        for (std::size_t r = 0; r < rows; ++r) {
                          for (std::size_t j = 0; j < widths[i]; ++j) {
                            gp.data[r * widths[i] + j] += g.data[r * total + off + j];
                          }
                        }
                      }
                      off += widths[i];
                    }
                  });
}

template <typename Real>
Var concat_rows(Tape<Real>& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw UsageError("concat_rows: no inputs");
  if (parts.size() == 1) return parts[0];
  const std::size_t cols = t.value(parts[0]).cols();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Var p : parts) {
    const auto& P = t.value(p);
    if (P.cols() != cols) mismatch("concat_rows", t.value(parts[0]).shape, P.shape);
    offsets.push_back(total);
    total += P.rows();
  }
  Tensor<Real> Y({total, cols});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& P = t.value(parts[i]);
    std::copy(P.data.begin(), P.data.end(),
              Y.data.begin() + static_cast<std::ptrdiff_t>(offsets[i] * cols));
  }
  return t.record(std::move(Y), parts, [parts, offsets, cols](Tape<Real>& t, Var self) {
    const auto& g = t.grad(self);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (!t.needs_grad(parts[i])) continue;
      auto& gp = t.grad(parts[i]);
      const std::size_t base = offsets[i] * cols;
      for (std::size_t j = 0; j < gp.size(); ++j) gp.data[j] += g.data[base + j];
    }
  });
}

template <typename Real>
Var slice_cols(Tape<Real>& t, Var a, std::size_t begin, std::size_t end) {
  const auto& A = t.value(a);
  const std::size_t rows = A.rows(), cols = A.cols();
  if (begin > end || end > cols) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside " + shape_string(A.shape));
  }
  const std::size_t width = end - begin;
  Tensor<Real> Y({rows, width});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(A.data.begin() + static_cast<std::ptrdiff_t>(r * cols + begin), width,
                Y.data.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return t.record(std::move(Y), {a}, [a, rows, cols, begin, width](Tape<Real>& t, Var self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(a);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < width; ++j) ga.data[r * cols + begin + j] += g.data[r * width + j];
    }
  });
}

template <typename Real>
Var slice_rows(Tape<Real>& t, Var a, std::size_t begin, std::size_t end) {
  const auto& A = t.value(a);
  const std::size_t rows = A.rows(), cols = A.cols();
  if (begin > end || end > rows) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside " + shape_string(A.shape));
  }
  Tensor<Real> Y({end - begin, cols});
  std::copy(A.data.begin() + static_cast<std::ptrdiff_t>(begin * cols),
            A.data.begin() + static_cast<std::ptrdiff_t>(end * cols), Y.data.begin());
  return t.record(std::move(Y), {a}, [a, begin, cols](Tape<Real>& t, Var self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[begin * cols + i] += g.data[i];
  });
}

#define TAGREC_INSTANTIATE_OPS(Real)                                                         \
  template Var matmul<Real>(Tape<Real>&, Var, Var);                                          \
  template Var matmul_bt<Real>(Tape<Real>&, Var, Var);                                       \
  template Var add<Real>(Tape<Real>&, Var, Var);                                             \
  template Var mul<Real>(Tape<Real>&, Var, Var);                                             \
  template Var scale<Real>(Tape<Real>&, Var, Real);                                          \
  template Var add_scalar<Real>(Tape<Real>&, Var, Real);                                     \
  template Var softmax_rows<Real>(Tape<Real>&, Var);                                         \
  template Var layer_norm<Real>(Tape<Real>&, Var, Var, Var, Real);                           \
  template Var gelu<Real>(Tape<Real>&, Var);                                                 \
  template Var sigmoid<Real>(Tape<Real>&, Var);                                              \
  template Var log<Real>(Tape<Real>&, Var);                                                  \
  template Var clamp<Real>(Tape<Real>&, Var, Real, Real);                                    \
  template Var sum<Real>(Tape<Real>&, Var);                                                  \
  template Var embedding<Real>(Tape<Real>&, Var, std::span<const std::int32_t>);             \
  template Var masked_mean<Real>(Tape<Real>&, Var, std::span<const std::uint8_t>);           \
  template Var masked_max<Real>(Tape<Real>&, Var, std::span<const std::uint8_t>);            \
  template Var concat_cols<Real>(Tape<Real>&, const std::vector<Var>&);                      \
  template Var concat_rows<Real>(Tape<Real>&, const std::vector<Var>&);                      \
  template Var slice_cols<Real>(Tape<Real>&, Var, std::size_t, std::size_t);                 \
  template Var slice_rows<Real>(Tape<Real>&, Var, std::size_t, std::size_t);

TAGREC_INSTANTIATE_OPS(float)
TAGREC_INSTANTIATE_OPS(double)

#undef TAGREC_INSTANTIATE_OPS

}  // namespace tagrec::ops
