#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tagrec/autodiff.hpp"

// Differentiable primitives over 2-D tensors. Every op validates shapes and
// throws ShapeError naming both operands on mismatch.
namespace tagrec::ops {

template <typename Real> Var matmul(Tape<Real>& t, Var a, Var b);     // [m,k]x[k,n]
template <typename Real> Var matmul_bt(Tape<Real>& t, Var a, Var b);  // [m,k]x[n,k]^T
// Same shape, or `b` a single row broadcast over the rows of `a`.
template <typename Real> Var add(Tape<Real>& t, Var a, Var b);
template <typename Real> Var mul(Tape<Real>& t, Var a, Var b);  // elementwise
template <typename Real> Var scale(Tape<Real>& t, Var a, Real factor);
template <typename Real> Var add_scalar(Tape<Real>& t, Var a, Real offset);
template <typename Real> Var softmax_rows(Tape<Real>& t, Var a);
// Normalises each row (biased variance), then applies gain and bias.
template <typename Real> Var layer_norm(Tape<Real>& t, Var x, Var gain, Var bias, Real eps = Real(1e-5));
template <typename Real> Var gelu(Tape<Real>& t, Var a);
template <typename Real> Var sigmoid(Tape<Real>& t, Var a);
template <typename Real> Var log(Tape<Real>& t, Var a);
template <typename Real> Var clamp(Tape<Real>& t, Var a, Real lo, Real hi);
template <typename Real> Var sum(Tape<Real>& t, Var a);  // -> [1,1]
// Rows of `table` selected by `ids`.
template <typename Real> Var embedding(Tape<Real>& t, Var table, std::span<const std::int32_t> ids);
// Mean of the rows whose mask entry is non-zero -> [1, cols].
template <typename Real> Var masked_mean(Tape<Real>& t, Var a, std::span<const std::uint8_t> mask);
// Element-wise maximum over masked rows; ties route the gradient to the first row.
template <typename Real> Var masked_max(Tape<Real>& t, Var a, std::span<const std::uint8_t> mask);
template <typename Real> Var concat_cols(Tape<Real>& t, const std::vector<Var>& parts);
template <typename Real> Var concat_rows(Tape<Real>& t, const std::vector<Var>& parts);
template <typename Real> Var slice_cols(Tape<Real>& t, Var a, std::size_t begin, std::size_t end);
template <typename Real> Var slice_rows(Tape<Real>& t, Var a, std::size_t begin, std::size_t end);

}  // namespace tagrec::ops
