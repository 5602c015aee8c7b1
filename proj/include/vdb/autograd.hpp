// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

// Define-by-run reverse-mode differentiation. Every differentiable operation
// returns a Var whose node remembers its inputs and a closure that pushes the
// node's gradient back into them. The graph lives exactly as long as the Vars
// that reference it; parameters are long-lived leaf Vars.

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vdb/tensor.hpp"

namespace vdb {

template <class T>
struct Node {
  Tensor<T> value;
  std::vector<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  /// Gradient buffer of this node, allocated (zeroed) on first use.
  std::span<T> grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false)
      : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var parameter(Tensor<T> value) { return Var(std::move(value), true); }

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor<T>& value() const { return node_->value; }
  /// Direct access for optimizers and initializers; never use on
  /// intermediate results that are part of a live graph.
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& shared() const { return node_; }

  /// Value of a single-element Var.
  T item() const;

  friend bool operator==(const Var& a, const Var& b) {
    return a.node_ == b.node_;
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

/// Records an operation. `backward` is stored only when recording is enabled
/// and at least one parent requires a gradient; it receives the output node
/// (its grad is populated) and must accumulate into parent grad buffers.
template <class T>
Var<T> record(const char* op, Tensor<T> value, std::vector<Var<T>> parents,
              std::function<void(Node<T>&)> backward);

/// Parent gradient buffer if that parent needs one, else an empty span.
template <class T>
std::span<T> parent_grad(Node<T>& self, std::size_t i) {
  Node<T>& p = *self.parents[i];
  if (!p.requires_grad) return {};
  return p.grad_buffer();
}

enum class Unreachable { kThrow, kZero };

/// Exact reverse-mode gradients of a scalar `loss` with respect to `params`,
/// in the same order. A parameter the loss does not depend on through
/// recorded operations raises UnreachableParameter (or yields zeros under
/// Unreachable::kZero).
template <class T>
std::vector<Tensor<T>> grad(const Var<T>& loss, std::span<const Var<T>> params,
                            Unreachable policy = Unreachable::kThrow);

}  // namespace vdb
