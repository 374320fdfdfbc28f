#include "tagrec/tensor.hpp"

#include "tagrec/errors.hpp"

namespace tagrec {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (const auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename Real>
Tensor<Real>::Tensor(Shape s, Real fill) : shape(std::move(s)), data(numel(shape), fill) {}

template <typename Real>
Tensor<Real>::Tensor(Shape s, std::vector<Real> values) : shape(std::move(s)), data(std::move(values)) {
  if (numel(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_string(shape) + " does not hold " +
                     std::to_string(data.size()) + " values");
  }
}

template <typename Real>
std::size_t Tensor<Real>::rows() const {
  if (shape.size() == 1) return 1;
  if (shape.size() != 2) throw ShapeError("expected a matrix, got " + shape_string(shape));
  return shape[0];
}

template <typename Real>
std::size_t Tensor<Real>::cols() const {
  if (shape.size() == 1) return shape[0];
  if (shape.size() != 2) throw ShapeError("expected a matrix, got " + shape_string(shape));
  return shape[1];
}

template struct Tensor<float>;
template struct Tensor<double>;

}  // namespace tagrec
