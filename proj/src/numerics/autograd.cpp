// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include "vdb/autograd.hpp"

#include <unordered_set>

namespace vdb {
namespace {

thread_local bool g_grad_enabled = true;

template <class T>
std::vector<Node<T>*> topo_order(Node<T>* root) {
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  // Iterative post-order DFS; graphs can be thousands of nodes deep.
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second)
        stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_mode_enabled() { return g_grad_enabled; }

template <class T>
T Var<T>::item() const {
  if (size() != 1)
    throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return node_->value[0];
}

template <class T>
Var<T> record(const char* op, Tensor<T> value, std::vector<Var<T>> parents,
              std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  if (g_grad_enabled)
    for (const auto& p : parents) needs = needs || p.requires_grad();
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.shared());
    node->backward = std::move(backward);
  }
  return Var<T>(std::move(node));
}

template <class T>
std::vector<Tensor<T>> grad(const Var<T>& loss, std::span<const Var<T>> params,
                            Unreachable policy) {
  if (loss.size() != 1)
    throw ShapeError("grad: loss must be scalar, got shape " +
                     to_string(loss.shape()));
  std::vector<Node<T>*> order;
  if (loss.requires_grad()) order = topo_order(loss.node());
  const std::unordered_set<Node<T>*> reachable(order.begin(), order.end());

  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!reachable.contains(params[i].node()) &&
        policy == Unreachable::kThrow)
      throw UnreachableParameter("unreachable parameter #" +
                                 std::to_string(i) + " (shape " +
                                 to_string(params[i].shape()) + ")");
  }

  for (Node<T>* n : order) n->grad.clear();
  if (!order.empty()) order.back()->grad_buffer()[0] = T(1);

  std::unordered_set<const Node<T>*> keep;
  for (const auto& p : params) keep.insert(p.node());

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->grad.empty()) continue;
    if (n->backward) n->backward(*n);
    if (!keep.contains(n)) {
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }

  std::vector<Tensor<T>> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    Node<T>* n = p.node();
    if (n->grad.empty())
      out.emplace_back(p.shape());
    else
      out.emplace_back(p.shape(), n->grad);
  }
  for (const auto& p : params) p.node()->grad.clear();
  return out;
}

#define VDB_INSTANTIATE(T)                                                  \
  template class Var<T>;                                                    \
  template Var<T> record<T>(const char*, Tensor<T>, std::vector<Var<T>>,    \
                            std::function<void(Node<T>&)>);                 \
  template std::vector<Tensor<T>> grad<T>(const Var<T>&,                    \
                                          std::span<const Var<T>>,          \
                                          Unreachable);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb
