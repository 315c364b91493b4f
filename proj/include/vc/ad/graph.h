// vc/ad/graph.h

// Copyright 2026  seqvc authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VC_AD_GRAPH_H_
#define VC_AD_GRAPH_H_

#include <atomic>
#include <functional>
#include <memory>
#include <vector>

#include "vc/base/common.h"

namespace vc {
namespace ad {

// Reverse-mode tape over dense Eigen matrices.  Ops evaluate eagerly at
// build time; Backward() replays the tape in reverse over the ancestors of
// the requested scalar.  The tape is rebuilt every training step.

template <typename S>
struct Node;

template <typename S>
struct Tensor {
  std::string name;
  Mat<S> value;
  Mat<S> grad;  // same shape as value, zeroed between optimizer steps
  bool trainable = true;

  // Cache of the leaf node wrapping this tensor on the current tape, so a
  // tensor used at many steps costs one leaf.  Valid while wrap_tape_id
  // matches a live tape.
  uint64_t wrap_tape_id = 0;
  Node<S> *wrap_node = nullptr;

  Tensor() = default;
  Tensor(std::string n, Mat<S> v)
      : name(std::move(n)), value(std::move(v)),
        grad(Mat<S>::Zero(value.rows(), value.cols())) {}

  void ZeroGrad() { grad.setZero(); }
  int64_t Size() const { return value.size(); }
};

template <typename S>
struct Node {
  Mat<S> val;
  Mat<S> grad;  // empty until a consumer contributes
  bool needs_grad = false;
  bool in_path = false;
  std::vector<Node<S> *> parents;
  std::function<void(Node<S> &)> backprop;
  Tensor<S> *bound = nullptr;  // parameter leaves accumulate here

  Mat<S> &EnsureGrad() {
    if (grad.size() == 0) grad = Mat<S>::Zero(val.rows(), val.cols());
    return grad;
  }
  int Rows() const { return static_cast<int>(val.rows()); }
  int Cols() const { return static_cast<int>(val.cols()); }
};

template <typename S>
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {
    static std::atomic<uint64_t> counter{1};
    id_ = counter.fetch_add(1);
  }

  bool grad_enabled() const { return grad_enabled_; }
  uint64_t id() const { return id_; }

  Node<S> *Alloc() {
    nodes_.push_back(std::make_unique<Node<S>>());
    return nodes_.back().get();
  }

  Node<S> *Constant(Mat<S> v) {
    Node<S> *n = Alloc();
    n->val = std::move(v);
    return n;
  }

  Node<S> *Param(Tensor<S> &t) {
    if (t.wrap_tape_id == id_) return t.wrap_node;
    Node<S> *n = Alloc();
    n->val = t.value;
    if (grad_enabled_ && t.trainable) {
      n->needs_grad = true;
      n->bound = &t;
      n->backprop = [](Node<S> &self) { self.bound->grad += self.grad; };
    }
    t.wrap_tape_id = id_;
    t.wrap_node = n;
    return n;
  }

  // Accumulates d(loss)/d(node) into node->grad for every ancestor of
  // `loss`, and d(loss)/d(parameter) into the bound Tensor grads.  Only the
  // subgraph that feeds `loss` is traversed.
  void Backward(Node<S> *loss) {
    VC_CHECK(grad_enabled_, "Backward on a no-grad tape");
    VC_CHECK(loss->val.size() == 1, "Backward target must be a scalar node");
    MarkAncestors(loss);
    loss->EnsureGrad().setConstant(S(1));
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<S> *n = it->get();
      if (!n->in_path) continue;
      n->in_path = false;
      if (n->grad.size() == 0) continue;  // no contribution reached it
      if (n->backprop) n->backprop(*n);
    }
  }

  // Clears node gradients so another Backward() can run on the same tape.
  void ZeroGrads() {
    for (auto &n : nodes_) {
      n->grad.resize(0, 0);
      n->in_path = false;
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  void MarkAncestors(Node<S> *root) {
    stack_.clear();
    stack_.push_back(root);
    root->in_path = true;
    while (!stack_.empty()) {
      Node<S> *n = stack_.back();
      stack_.pop_back();
      for (Node<S> *p : n->parents) {
        if (p->needs_grad && !p->in_path) {
          p->in_path = true;
          stack_.push_back(p);
        }
      }
    }
  }

  bool grad_enabled_;
  uint64_t id_ = 0;
  std::vector<std::unique_ptr<Node<S>>> nodes_;
  std::vector<Node<S> *> stack_;
};

}  // namespace ad
}  // namespace vc

#endif  // VC_AD_GRAPH_H_
