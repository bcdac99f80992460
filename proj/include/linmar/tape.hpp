#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "linmar/tensor.hpp"

namespace linmar {

// Reverse-mode tape. Ops append nodes in execution order, so every node's
// inputs precede it and a single reverse sweep visits each node exactly once.
// Single-owner by design: never share one tape across workers; independent
// computations get independent tapes.
template <class Scalar>
class Tape {
 public:
  using Grad = Tensor<Scalar>;
  // backward(tape, grad_of_output): accumulate into the inputs' grad slots.
  using BackwardFn = std::function<void(Tape&, const Grad&)>;

  struct Node {
    const char* op;            // operation kind, for diagnostics
    std::vector<Index> inputs; // tape ids of tracked inputs (-1 entries allowed)
    BackwardFn backward;       // empty for leaves
  };

  // Register a leaf. Returns a tracked copy; gradients accumulate at its id.
  Tensor<Scalar> watch(const Tensor<Scalar>& t) {
    Tensor<Scalar> leaf = t.detached();
    leaf.requires_grad = true;
    leaf.tape = this;
    leaf.node = record("leaf", {}, BackwardFn{});
    return leaf;
  }

  Index record(const char* op, std::vector<Index> inputs, BackwardFn backward) {
    for (Index id : inputs)
      if (id >= static_cast<Index>(nodes_.size()))
        throw ContractError("tape: node input recorded after its consumer");
    nodes_.push_back(Node{op, std::move(inputs), std::move(backward)});
    return static_cast<Index>(nodes_.size()) - 1;
  }

  size_t size() const { return nodes_.size(); }
  const Node& node_at(Index id) const { return nodes_.at(id); }

  // Add g into the gradient slot of node id.
  void accumulate(Index id, const Tensor<Scalar>& g) {
    if (id < 0 || id >= static_cast<Index>(nodes_.size()))
      throw ContractError("tape: accumulate on unknown node");
    Grad& slot = grads_.at(id);
    if (slot.numel() == 0) {
      slot = g.detached();
    } else {
      if (slot.data.size() != g.data.size())
        throw DimensionError("tape: gradient shape mismatch at node " + std::to_string(id));
      slot.data += g.data;
    }
  }

  // Seed d(loss)/d(loss) = 1 and sweep the tape once in reverse.
  void backward(const Tensor<Scalar>& loss) {
    if (!loss.tracked() || loss.tape != this)
      throw ContractError("backward: loss is not tracked on this tape");
    if (loss.numel() != 1)
      throw ContractError("backward: loss must be a scalar");
    grads_.assign(nodes_.size(), Grad{});
    accumulate(loss.node, Tensor<Scalar>::ones({1}));
    for (Index id = loss.node; id >= 0; --id) {
      if (grads_[id].numel() == 0) continue;  // unreachable from the loss
      if (nodes_[id].backward) nodes_[id].backward(*this, grads_[id]);
    }
    ran_backward_ = true;
  }

  bool has_grad(const Tensor<Scalar>& t) const {
    return ran_backward_ && t.tracked() && t.tape == this &&
           t.node < static_cast<Index>(grads_.size()) && grads_[t.node].numel() > 0;
  }

  // Gradient of the last backward() loss w.r.t. t. Zero if t never
  // influenced the loss.
  Tensor<Scalar> grad(const Tensor<Scalar>& t) const {
    if (!ran_backward_) throw ContractError("grad: backward has not run");
    if (!t.tracked() || t.tape != this)
      throw ContractError("grad: tensor is not tracked on this tape");
    if (t.node >= static_cast<Index>(grads_.size()) || grads_[t.node].numel() == 0) {
      Tensor<Scalar> z = Tensor<Scalar>::zeros(t.shape);
      return z;
    }
    Tensor<Scalar> g = grads_[t.node].detached();
    g.shape = t.shape;  // grads are stored flat; give them the owner's shape
    return g;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Grad> grads_;
  bool ran_backward_ = false;
};

using Taped = Tape<double>;

}  // namespace linmar
