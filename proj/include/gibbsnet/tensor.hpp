#pragma once

#include <functional>
#include <vector>

#include "gibbsnet/common.hpp"

namespace gibbsnet {

class Tape;

// Dense rank-2 value, optionally connected to a gradient tape. Row vectors
// stand in for rank-1 values and a 1x1 matrix for a scalar. Copying a Tensor
// copies the value; the tape connection is a lightweight handle.
struct Tensor {
  Matrix value;
  Tape* tape = nullptr;  // nullptr: constant / detached
  int node = -1;

  Tensor() = default;
  explicit Tensor(Matrix v) : value(std::move(v)) {}
  Tensor(Matrix v, Tape* t, int n) : value(std::move(v)), tape(t), node(n) {}

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  Eigen::Index size() const { return value.size(); }
  bool connected() const { return tape != nullptr && node >= 0; }
  bool is_scalar() const { return value.rows() == 1 && value.cols() == 1; }
  double scalar() const {
    if (!is_scalar()) throw ContractError("scalar() on tensor of shape " + shape_str(value));
    return value(0, 0);
  }
};

inline Tensor constant(Matrix v) { return Tensor(std::move(v)); }

inline Tensor scalar_tensor(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return Tensor(m);
}

// Wengert-list reverse-mode tape. Nodes are appended in execution order, so
// the list itself is a topological order; backward() walks it once in
// reverse. Leaves are parameters registered up front; their accumulated
// gradients are read back through the Tensor handle after backward.
class Tape {
 public:
  using BackwardFn = std::function<void(const Matrix& out_grad, Tape& tape)>;

  Tensor leaf(Matrix value) {
    const Eigen::Index r = value.rows(), c = value.cols();
    const int id = add_node(nullptr, r, c);
    return Tensor(std::move(value), this, id);
  }

  // Records an interior node. `back` receives the accumulated output
  // gradient and must push contributions into parents via accum_grad.
  int add_node(BackwardFn back, Eigen::Index rows, Eigen::Index cols) {
    nodes_.push_back(Node{std::move(back), rows, cols});
    return static_cast<int>(nodes_.size()) - 1;
  }

  void accum_grad(int node, const Matrix& g) {
    Matrix& slot = grads_[static_cast<std::size_t>(node)];
    if (slot.size() == 0)
      slot = g;
    else
      slot += g;
  }

  // Accumulates d(loss)/d(node) for every node reachable from `loss`.
  // One backward per tape; reset() rewinds everything.
  void backward(const Tensor& loss) {
    if (!loss.connected() || loss.tape != this)
      throw ContractError("backward: loss is detached from this tape");
    if (!loss.is_scalar())
      throw ContractError("backward: loss must be scalar, got shape " + shape_str(loss.value));
    if (backward_done_)
      throw ContractError("backward: already called on this tape (reset() first)");
    backward_done_ = true;

    grads_.assign(nodes_.size(), Matrix());
    Matrix seed(1, 1);
    seed(0, 0) = 1.0;
    grads_[static_cast<std::size_t>(loss.node)] = seed;

    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      Matrix& g = grads_[static_cast<std::size_t>(i)];
      if (g.size() == 0) continue;  // unreachable from loss
      if (n.back) n.back(g, *this);
    }
  }

  // Gradient of the last backward() w.r.t. `t`. Unreached nodes report zero.
  Matrix grad(const Tensor& t) const {
    if (!t.connected() || t.tape != this)
      throw ContractError("grad: tensor is not connected to this tape");
    if (!backward_done_) throw ContractError("grad: backward() has not run");
    const Matrix& g = grads_[static_cast<std::size_t>(t.node)];
    if (g.size() == 0) {
      const Node& n = nodes_[static_cast<std::size_t>(t.node)];
      return Matrix::Zero(n.rows, n.cols);
    }
    return g;
  }

  void reset() {
    nodes_.clear();
    grads_.clear();
    backward_done_ = false;
  }

  std::size_t node_count() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

 private:
  struct Node {
    BackwardFn back;  // null for leaves
    Eigen::Index rows, cols;
  };
  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
  bool backward_done_ = false;
};

// Value-identical tensor with no tape connection; the single-step backprop
// rule in the chains module is built out of this.
inline Tensor detach(const Tensor& t) { return Tensor(t.value); }

}  // namespace gibbsnet
