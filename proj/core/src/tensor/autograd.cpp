#include "xmodel/tensor/autograd.hpp"

#include <unordered_set>

#include <fmt/format.h>

#include "internal.hpp"
#include "xmodel/error.hpp"

namespace xmodel::tensor {

using detail::Node;

GradMap backward(const Tensor& loss) {
  if (!loss.defined()) throw Error("backward: undefined loss tensor");
  const auto& root = loss.node();
  if (root->data.size() != 1) {
    throw ShapeError(fmt::format("backward: loss must be a scalar, got shape {}", to_string(root->shape)));
  }
  if (root->consumed) {
    throw Error("backward: this graph was already consumed by an earlier backward call; run a new forward");
  }
  if (!root->requires_grad) {
    throw Error("backward: loss is detached (no input requires grad)");
  }

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior grads start fresh; leaf grads accumulate across calls.
  for (Node* n : order) {
    if (n->op != OpKind::kLeaf) n->grad.clear();
  }
  root->ensure_grad()[0] += 1.0;

  GradMap grads;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->op == OpKind::kLeaf) continue;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
  for (Node* n : order) {
    if (n->op == OpKind::kLeaf) {
      grads.emplace(n->id, Tensor::from_data(n->shape, n->grad.empty() ? std::vector<double>(n->data.size(), 0.0)
                                                                        : n->grad));
    } else {
      n->parents.clear();
      n->backward = nullptr;
      n->grad.clear();
      n->grad.shrink_to_fit();
      n->consumed = true;
    }
  }
  return grads;
}

}  // namespace xmodel::tensor
