#include "tagrec/autodiff.hpp"

#include "tagrec/errors.hpp"

namespace tagrec {

template <typename Real>
Var Tape<Real>::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

template <typename Real>
Var Tape<Real>::constant(Tensor<Real> value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

template <typename Real>
Var Tape<Real>::leaf(Tensor<Real> value, bool requires_grad) {
  Node n;
  n.owned = std::move(value);
  n.needs_grad = grad_enabled_ && requires_grad;
  return push(std::move(n));
}

template <typename Real>
Var Tape<Real>::param(const Tensor<Real>& value, Tensor<Real>* grad_sink) {
  if (grad_sink != nullptr && grad_sink->shape != value.shape) {
    throw ShapeError("param: gradient sink " + shape_string(grad_sink->shape) +
                     " does not match value " + shape_string(value.shape));
  }
  Node n;
  n.borrowed = &value;
  n.grad_sink = grad_sink;
  n.needs_grad = grad_enabled_ && grad_sink != nullptr;
  return push(std::move(n));
}

template <typename Real>
Var Tape<Real>::record(Tensor<Real> value, const std::vector<Var>& parents, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  if (grad_enabled_) {
    for (const Var p : parents) n.needs_grad = n.needs_grad || nodes_[p.id].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

template <typename Real>
Var Tape<Real>::record(Tensor<Real> value, std::initializer_list<Var> parents, BackwardFn backward) {
  return record(std::move(value), std::vector<Var>(parents), std::move(backward));
}

template <typename Real>
const Tensor<Real>& Tape<Real>::value(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.borrowed != nullptr ? *n.borrowed : n.owned;
}

template <typename Real>
Tensor<Real>& Tape<Real>::grad(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.grad_sink != nullptr) return *n.grad_sink;
  if (!n.grad_ready) {
    n.own_grad = Tensor<Real>(value(v).shape);
    n.grad_ready = true;
  }
  return n.own_grad;
}

template <typename Real>
bool Tape<Real>::has_grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.grad_sink != nullptr || n.grad_ready;
}

template <typename Real>
void Tape<Real>::backward(Var loss) {
  if (value(loss).size() != 1) {
    throw UsageError("backward: loss must be a scalar, got shape " +
                     shape_string(value(loss).shape));
  }
  if (!nodes_[loss.id].needs_grad) return;
  grad(loss).data[0] += Real(1);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || !n.backward || !n.grad_ready) continue;
    n.backward(*this, Var{id});
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace tagrec
