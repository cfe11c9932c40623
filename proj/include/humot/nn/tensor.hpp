#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "humot/error.hpp"

namespace humot::nn {

/// Row-major dense matrix. Token sets are stored one token per row.
template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A learnable tensor together with its gradient accumulator.
template <typename T>
struct Parameter {
  Matrix<T> value;
  Matrix<T> grad;

  Eigen::Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <typename T>
struct Node {
  Matrix<T> value;
  Matrix<T> grad;
  const Matrix<T>* external = nullptr;  // parameter value (not owned)
  Matrix<T>* external_grad = nullptr;   // parameter gradient accumulator
  bool requires_grad = false;
  std::function<void(Node&)> backward;

  const Matrix<T>& val() const { return external ? *external : value; }

  template <typename Derived>
  void accumulate(const Eigen::MatrixBase<Derived>& g) {
    if (!requires_grad) return;
    Matrix<T>& target = external_grad ? *external_grad : grad;
    if (target.size() == 0)
      target = g;
    else
      target += g;
  }
};

template <typename T>
class Tape;

/// Handle to a node of the computation graph. Without a tape the graph is
/// not recorded and intermediates are released as soon as they go out of
/// scope (inference mode).
template <typename T>
class Var {
 public:
  Var() = default;

  static Var constant(Matrix<T> value) {
    Var v;
    v.node_ = std::make_shared<Node<T>>();
    v.node_->value = std::move(value);
    return v;
  }

  /// Read-only view of a parameter, never differentiated.
  static Var view(const Parameter<T>& p) {
    Var v;
    v.node_ = std::make_shared<Node<T>>();
    v.node_->external = &p.value;
    return v;
  }

  const Matrix<T>& value() const { return node_->val(); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tape<T>* tape() const { return tape_; }
  const std::shared_ptr<Node<T>>& node() const { return node_; }

  /// Gradient of a leaf created with Tape::variable, after backward().
  const Matrix<T>& grad() const { return node_->grad; }

  /// Result node for an op over `inputs`. The result is recorded when any
  /// input requires a gradient.
  template <typename... Vars>
  static Var result(Matrix<T> value, const Vars&... inputs) {
    Var out;
    out.node_ = std::make_shared<Node<T>>();
    out.node_->value = std::move(value);
    Tape<T>* tape = nullptr;
    bool needs = false;
    ((needs = needs || inputs.requires_grad(), tape = tape ? tape : (inputs.requires_grad() ? inputs.tape() : nullptr)), ...);
    if (needs && tape) {
      out.node_->requires_grad = true;
      out.tape_ = tape;
    }
    return out;
  }

  /// Attaches the backward function and records the node. No-op when the
  /// result does not require a gradient.
  void set_backward(std::function<void(Node<T>&)> fn) const;

 private:
  friend class Tape<T>;
  std::shared_ptr<Node<T>> node_;
  Tape<T>* tape_ = nullptr;
};

/// Records differentiable operations in creation order and runs them in
/// reverse. One tape serves one forward/backward pass.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Parameter leaf; gradients accumulate into `p.grad`.
  Var<T> parameter(Parameter<T>& p) {
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
    Var<T> v;
    v.node_ = std::make_shared<Node<T>>();
    v.node_->external = &p.value;
    v.node_->external_grad = &p.grad;
    v.node_->requires_grad = true;
    v.tape_ = this;
    return v;
  }

  /// Free leaf whose gradient is kept on the node.
  Var<T> variable(Matrix<T> value) {
    Var<T> v;
    v.node_ = std::make_shared<Node<T>>();
    v.node_->value = std::move(value);
    v.node_->requires_grad = true;
    v.tape_ = this;
    return v;
  }

  void record(std::shared_ptr<Node<T>> node) { nodes_.push_back(std::move(node)); }

  /// Back-propagates from a scalar (1x1) node, then clears the tape.
  void backward(const Var<T>& root, T seed = T(1)) {
    if (root.rows() != 1 || root.cols() != 1) throw ModelError("backward() needs a scalar root");
    if (!root.requires_grad()) {
      nodes_.clear();
      return;
    }
    root.node()->grad = Matrix<T>::Constant(1, 1, seed);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<T>& n = **it;
      if (n.backward && n.grad.size() != 0) n.backward(n);
      // Intermediate gradients are no longer needed once propagated.
      n.grad.resize(0, 0);
      n.backward = nullptr;
    }
    nodes_.clear();
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::shared_ptr<Node<T>>> nodes_;
};

template <typename T>
void Var<T>::set_backward(std::function<void(Node<T>&)> fn) const {
  if (!requires_grad() || !tape_) return;
  node_->backward = std::move(fn);
  tape_->record(node_);
}

}  // namespace humot::nn
