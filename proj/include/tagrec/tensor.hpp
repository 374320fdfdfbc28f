#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tagrec {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major buffer. One-dimensional tensors behave as a single row.
template <typename Real>
struct Tensor {
  Shape shape;
  std::vector<Real> data;

  Tensor() = default;
  explicit Tensor(Shape s, Real fill = Real(0));
  Tensor(Shape s, std::vector<Real> values);

  std::size_t size() const noexcept { return data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  Real& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  Real at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool operator==(const Tensor&) const = default;
};

// Converts element type, keeping the shape.
template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  Tensor<To> out;
  out.shape = t.shape;
  out.data.assign(t.data.begin(), t.data.end());
  return out;
}

extern template struct Tensor<float>;
extern template struct Tensor<double>;

}  // namespace tagrec
