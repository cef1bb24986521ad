// SPDX-License-Identifier: Apache-2.0
#include "ran/tape.hpp"

namespace ran {

namespace {
const Tensor kEmpty;
}

Var GradTape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

Var GradTape::leaf_ref(const Tensor* value, bool requires_grad) {
  if (value == nullptr) throw std::invalid_argument("GradTape::leaf_ref: null tensor");
  Node n;
  n.ref = value;
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

Var GradTape::node(Tensor value, std::function<void(GradTape&)> backward) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = true;
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

const Tensor& GradTape::value(Var v) const {
  const Node& n = nodes_[check(v)];
  return n.ref ? *n.ref : n.owned;
}

const Tensor& GradTape::grad(Var v) const {
  const Node& n = nodes_[check(v)];
  if (!n.has_grad) {
    // Exactly zero off the loss path; materialize lazily.
    auto& slot = const_cast<Node&>(n);
    slot.grad = Tensor(value(v).shape);
    slot.has_grad = true;
  }
  return n.grad;
}

Tensor& GradTape::grad_slot(Var v) {
  Node& n = nodes_[check(v)];
  if (!n.has_grad) {
    n.grad = Tensor(value(v).shape);
    n.has_grad = true;
  }
  return n.grad;
}

void GradTape::backward(Var scalar_loss) {
  if (ran_backward_) throw std::runtime_error("GradTape::backward: already ran");
  const size_t loss_id = check(scalar_loss);
  if (value(scalar_loss).numel() != 1)
    throw std::invalid_argument("GradTape::backward: loss must be scalar");
  ran_backward_ = true;
  grad_slot(scalar_loss).at(0) = 1.0;
  for (size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (i > loss_id) continue;  // recorded after the loss, cannot feed it
    if (n.backward && n.has_grad) n.backward(*this);
  }
}

}  // namespace ran
