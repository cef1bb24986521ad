// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "ran/tensor.hpp"

namespace ran {

/// Handle to a value recorded on a GradTape.
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Records primitive applications in order; backward()
/// replays them in exact reverse order, accumulating gradients. A tape is
/// single-threaded and must not be shared while recording.
class GradTape {
 public:
  /// Leaf owning a copy of the value.
  Var leaf(Tensor value, bool requires_grad = false);

  /// Leaf referencing external storage; the caller keeps it alive and
  /// unchanged for the tape's lifetime.
  Var leaf_ref(const Tensor* value, bool requires_grad = true);

  /// Computed node. The backward function reads grad(out) and accumulates
  /// into its inputs through grad_slot().
  Var node(Tensor value, std::function<void(GradTape&)> backward);

  const Tensor& value(Var v) const;

  /// Accumulated gradient; a value not on any path to the loss has an
  /// exactly-zero gradient.
  const Tensor& grad(Var v) const;

  bool has_grad(Var v) const { return nodes_[check(v)].has_grad; }

  /// False only for leaves created with requires_grad=false; backward rules
  /// skip accumulating into those.
  bool needs_grad(Var v) const { return nodes_[check(v)].requires_grad; }

  /// Gradient accumulator for v; allocates zeros on first touch.
  Tensor& grad_slot(Var v);

  /// Seeds d(loss)=1 and replays the tape backward. Callable once.
  void backward(Var scalar_loss);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::function<void(GradTape&)> backward;
  };

  size_t check(Var v) const {
    if (!v.valid() || static_cast<size_t>(v.id) >= nodes_.size())
      throw std::invalid_argument("GradTape: invalid Var");
    return static_cast<size_t>(v.id);
  }

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace ran
