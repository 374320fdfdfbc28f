#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "tagrec/tensor.hpp"

namespace tagrec {

// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

// Reverse-mode tape. Nodes are appended in evaluation order, which is a
// topological order, so backward() is a single reverse sweep that visits
// every node once.
template <typename Real>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, Var self)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  // Value that never receives a gradient.
  Var constant(Tensor<Real> value);
  // Owned leaf; its gradient is read back with grad().
  Var leaf(Tensor<Real> value, bool requires_grad = true);
  // Borrowed leaf. `value` must outlive the tape. Gradients are summed into
  // `grad_sink` (same shape) when it is non-null.
  Var param(const Tensor<Real>& value, Tensor<Real>* grad_sink);
  // Interior node produced by an op.
  Var record(Tensor<Real> value, std::initializer_list<Var> parents, BackwardFn backward);
  Var record(Tensor<Real> value, const std::vector<Var>& parents, BackwardFn backward);

  const Tensor<Real>& value(Var v) const;
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  // Gradient buffer of `v`, zero-initialised on first access.
  Tensor<Real>& grad(Var v);
  bool has_grad(Var v) const;

  // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one value.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool grad_enabled() const noexcept { return grad_enabled_; }

 private:
  struct Node {
    Tensor<Real> owned;
    const Tensor<Real>* borrowed = nullptr;
    Tensor<Real> own_grad;
    bool grad_ready = false;
    Tensor<Real>* grad_sink = nullptr;
    bool needs_grad = false;
    BackwardFn backward;
  };

  Var push(Node node);

  bool grad_enabled_;
  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace tagrec
