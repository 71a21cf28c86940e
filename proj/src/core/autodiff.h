/* Copyright 2026 The geosyn Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef GEOSYN_CORE_AUTODIFF_H_
#define GEOSYN_CORE_AUTODIFF_H_

#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "core/tensor.h"

namespace geosyn {

// Reverse-mode autodiff over a define-by-run tape. Each op produces a Node
// whose backward closure accumulates into the parents' grads. With gradients
// globally disabled (NoGradGuard) no graph is recorded and intermediate
// values are freed as soon as they go out of scope.

inline thread_local bool g_grad_enabled = true;

inline bool grad_enabled() { return g_grad_enabled; }

struct NoGradGuard {
  NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
  ~NoGradGuard() { g_grad_enabled = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<T>>> parents;
  // Reads this->grad, accumulates into parents' grads via add_grad().
  std::function<void()> backward;

  void ensure_grad() {
    if (!grad.defined()) grad = Tensor<T>(value.shape());
  }

  void add_grad(const Tensor<T>& g) {
    ensure_grad();
    T* dst = grad.data();
    const T* src = g.data();
    int64_t n = grad.numel();
    for (int64_t i = 0; i < n; ++i) dst[i] += src[i];
  }

  void zero_grad() {
    if (grad.defined()) grad.fill(T(0));
  }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

using VarF = Var<float>;
using VarD = Var<double>;

template <typename T>
Var<T> make_var(Tensor<T> value, bool requires_grad = false) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

// Leaf sharing the same storage but cut off from the graph.
template <typename T>
Var<T> detach(const Var<T>& v) {
  return make_var<T>(v->value, false);
}

template <typename T>
bool any_requires_grad(std::initializer_list<const Var<T>*> vars) {
  if (!grad_enabled()) return false;
  for (const Var<T>* v : vars)
    if (*v && (*v)->requires_grad) return true;
  return false;
}

// Runs the tape in reverse topological order starting from a scalar root.
template <typename T>
void backward(const Var<T>& root) {
  if (!root->requires_grad)
    throw std::runtime_error("backward: root does not require grad");
  if (root->value.numel() != 1)
    throw std::runtime_error("backward: root must be scalar");

  // iterative post-order DFS
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  struct Frame {
    Node<T>* node;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({root.get(), 0});
  visited.insert(root.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      Node<T>* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad.fill(T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward();
  }
}

}  // namespace geosyn

#endif  // GEOSYN_CORE_AUTODIFF_H_
