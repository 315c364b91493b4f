// vc/nn/layers.h

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

#ifndef VC_NN_LAYERS_H_
#define VC_NN_LAYERS_H_

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "vc/ad/ops.h"
#include "vc/base/rng.h"

namespace vc {
namespace nn {

using ad::Node;
using ad::Tape;
using ad::Tensor;

enum class Init { kZero, kOne, kGlorot, kLstm, kNormal01 };

// Owns the tensors of one model component; iteration order is creation
// order, which the optimizer and the checkpoint format rely on.
template <typename S>
class ParamStore {
 public:
  Tensor<S> *Add(const std::string &name, int rows, int cols, Init init,
                 std::mt19937_64 *rng) {
    Mat<S> v;
    switch (init) {
      case Init::kZero:
        v = Mat<S>::Zero(rows, cols);
        break;
      case Init::kOne:
        v = Mat<S>::Ones(rows, cols);
        break;
      case Init::kGlorot: {
        S lim = std::sqrt(S(6) / S(rows + cols));
        v = RandomUniform<S>(*rng, rows, cols, -lim, lim);
        break;
      }
      case Init::kLstm: {
        // Bias layout (i, f, g, o): start with forget bias 1.
        v = Mat<S>::Zero(rows, cols);
        VC_CHECK(rows == 1 && cols % 4 == 0, "kLstm init is for gate biases");
        v.block(0, cols / 4, 1, cols / 4).setOnes();
        break;
      }
      case Init::kNormal01:
        v = RandomNormal<S>(*rng, rows, cols, S(0.1));
        break;
    }
    tensors_.push_back(std::make_unique<Tensor<S>>(name, std::move(v)));
    return tensors_.back().get();
  }

  Tensor<S> *AddState(const std::string &name, int rows, int cols, S fill) {
    tensors_.push_back(std::make_unique<Tensor<S>>(
        name, Mat<S>(Mat<S>::Constant(rows, cols, fill))));
    tensors_.back()->trainable = false;
    return tensors_.back().get();
  }

  Tensor<S> *Find(const std::string &name) const {
    for (const auto &t : tensors_)
      if (t->name == name) return t.get();
    return nullptr;
  }

  const std::vector<std::unique_ptr<Tensor<S>>> &tensors() const {
    return tensors_;
  }

  std::vector<Tensor<S> *> Trainable() const {
    std::vector<Tensor<S> *> out;
    for (const auto &t : tensors_)
      if (t->trainable) out.push_back(t.get());
    return out;
  }

  int64_t TotalParams() const {
    int64_t n = 0;
    for (const auto &t : tensors_)
      if (t->trainable) n += t->Size();
    return n;
  }

  void ZeroGrads() {
    for (const auto &t : tensors_) t->ZeroGrad();
  }

 private:
  std::vector<std::unique_ptr<Tensor<S>>> tensors_;
};

template <typename S>
struct Linear {
  Tensor<S> *w = nullptr;
  Tensor<S> *b = nullptr;

  void Build(ParamStore<S> *ps, const std::string &name, int in, int out,
             std::mt19937_64 *rng, bool bias = true) {
    w = ps->Add(name + ".w", in, out, Init::kGlorot, rng);
    if (bias) b = ps->Add(name + ".b", 1, out, Init::kZero, rng);
  }

  Node<S> *Forward(Tape<S> &t, Node<S> *x) const {
    if (b != nullptr) return Affine(t, x, t.Param(*w), t.Param(*b));
    return MatMul(t, x, t.Param(*w));
  }
};

template <typename S>
struct BatchNormLayer {
  Tensor<S> *gamma = nullptr;
  Tensor<S> *beta = nullptr;
  Tensor<S> *run_mean = nullptr;
  Tensor<S> *run_var = nullptr;
  S momentum = S(0.1);
  S eps = S(1e-5);

  void Build(ParamStore<S> *ps, const std::string &name, int dim) {
    gamma = ps->Add(name + ".gamma", 1, dim, Init::kOne, nullptr);
    beta = ps->Add(name + ".beta", 1, dim, Init::kZero, nullptr);
    run_mean = ps->AddState(name + ".rmean", 1, dim, S(0));
    run_var = ps->AddState(name + ".rvar", 1, dim, S(1));
  }

  Node<S> *Forward(Tape<S> &t, Node<S> *x, bool training) const {
    return BatchNorm(t, x, t.Param(*gamma), t.Param(*beta), &run_mean->value,
                     &run_var->value, training, momentum, eps);
  }
};

// SAME 1-D convolution over segmented rows, kernel stored as (k*Cin) x Cout.
template <typename S>
struct Conv1dSeg {
  Tensor<S> *w = nullptr;
  Tensor<S> *b = nullptr;
  int kernel = 0;

  void Build(ParamStore<S> *ps, const std::string &name, int in, int out,
             int k, std::mt19937_64 *rng) {
    kernel = k;
    w = ps->Add(name + ".w", k * in, out, Init::kGlorot, rng);
    b = ps->Add(name + ".b", 1, out, Init::kZero, rng);
  }

  Node<S> *Forward(Tape<S> &t, Node<S> *x, const std::vector<int> &lens) const {
    Node<S> *u = Unfold1dSeg(t, x, lens, kernel);
    return Affine(t, u, t.Param(*w), t.Param(*b));
  }
};

template <typename S>
struct Embedding {
  Tensor<S> *table = nullptr;

  void Build(ParamStore<S> *ps, const std::string &name, int count, int dim,
             std::mt19937_64 *rng) {
    table = ps->Add(name + ".table", count, dim, Init::kNormal01, rng);
  }

  Node<S> *Forward(Tape<S> &t, const std::vector<int> &ids) const {
    return SelectRows(t, t.Param(*table), ids);
  }
};

template <typename S>
struct LstmCell {
  Tensor<S> *w = nullptr;  // (in + hidden) x 4*hidden, gate order i f g o
  Tensor<S> *b = nullptr;
  int hidden = 0;

  void Build(ParamStore<S> *ps, const std::string &name, int in, int h,
             std::mt19937_64 *rng) {
    hidden = h;
    w = ps->Add(name + ".w", in + h, 4 * h, Init::kGlorot, rng);
    b = ps->Add(name + ".b", 1, 4 * h, Init::kLstm, rng);
  }

  struct State {
    Node<S> *h = nullptr;
    Node<S> *c = nullptr;
  };

  State Zero(Tape<S> &t, int batch) const {
    State s;
    s.h = t.Constant(Mat<S>::Zero(batch, hidden));
    s.c = t.Constant(Mat<S>::Zero(batch, hidden));
    return s;
  }

  // mask may be null (all rows live); rows with mask 0 get zero state, which
  // both silences padded tails and provides the clean start for a reversed
  // scan over left-padded positions.
  State Step(Tape<S> &t, Node<S> *x, const State &prev,
             const Vec<S> *mask) const {
    Node<S> *cat = ConcatCols(t, x, prev.h);
    Node<S> *gates = Affine(t, cat, t.Param(*w), t.Param(*b));
    Node<S> *gi = Sigmoid(t, SliceCols(t, gates, 0, hidden));
    Node<S> *gf = Sigmoid(t, SliceCols(t, gates, hidden, hidden));
    Node<S> *gg = Tanh(t, SliceCols(t, gates, 2 * hidden, hidden));
    Node<S> *go = Sigmoid(t, SliceCols(t, gates, 3 * hidden, hidden));
    State next;
    next.c = Add(t, CMul(t, gf, prev.c), CMul(t, gi, gg));
    next.h = CMul(t, go, Tanh(t, next.c));
    if (mask != nullptr) {
      next.c = ScaleRowsConst(t, next.c, *mask);
      next.h = ScaleRowsConst(t, next.h, *mask);
    }
    return next;
  }
};

// Per-step 0/1 row masks for a ragged batch.
template <typename S>
std::vector<Vec<S>> StepMasks(const std::vector<int> &lens, int steps) {
  std::vector<Vec<S>> masks(steps);
  for (int n = 0; n < steps; ++n) {
    Vec<S> m(static_cast<int>(lens.size()));
    for (size_t b = 0; b < lens.size(); ++b) m(b) = n < lens[b] ? S(1) : S(0);
    masks[n] = std::move(m);
  }
  return masks;
}

template <typename S>
struct Lstm {
  LstmCell<S> cell;

  void Build(ParamStore<S> *ps, const std::string &name, int in, int h,
             std::mt19937_64 *rng) {
    cell.Build(ps, name, in, h, rng);
  }

  std::vector<Node<S> *> Forward(Tape<S> &t, const std::vector<Node<S> *> &xs,
                                 const std::vector<int> &lens) const {
    auto masks = StepMasks<S>(lens, static_cast<int>(xs.size()));
    typename LstmCell<S>::State s = cell.Zero(t, xs.empty() ? 0 : xs[0]->Rows());
    std::vector<Node<S> *> out;
    out.reserve(xs.size());
    for (size_t n = 0; n < xs.size(); ++n) {
      s = cell.Step(t, xs[n], s, &masks[n]);
      out.push_back(s.h);
    }
    return out;
  }
};

template <typename S>
struct Blstm {
  LstmCell<S> fwd, bwd;

  void Build(ParamStore<S> *ps, const std::string &name, int in, int h,
             std::mt19937_64 *rng) {
    fwd.Build(ps, name + ".fwd", in, h, rng);
    bwd.Build(ps, name + ".bwd", in, h, rng);
  }

  // Per-step outputs of width 2h (forward ++ backward).
  std::vector<Node<S> *> Forward(Tape<S> &t, const std::vector<Node<S> *> &xs,
                                 const std::vector<int> &lens) const {
    int steps = static_cast<int>(xs.size());
    int batch = steps > 0 ? xs[0]->Rows() : 0;
    auto masks = StepMasks<S>(lens, steps);
    std::vector<Node<S> *> hf(steps), hb(steps);
    typename LstmCell<S>::State s = fwd.Zero(t, batch);
    for (int n = 0; n < steps; ++n) {
      s = fwd.Step(t, xs[n], s, &masks[n]);
      hf[n] = s.h;
    }
    s = bwd.Zero(t, batch);
    for (int n = steps - 1; n >= 0; --n) {
      s = bwd.Step(t, xs[n], s, &masks[n]);
      hb[n] = s.h;
    }
    std::vector<Node<S> *> out(steps);
    for (int n = 0; n < steps; ++n) out[n] = ConcatCols(t, hf[n], hb[n]);
    return out;
  }
};

// Concatenates adjacent step pairs along features, zero-padding an odd tail;
// lens become ceil(lens / 2).
template <typename S>
std::vector<Node<S> *> PairAdjacentSteps(Tape<S> &t,
                                         const std::vector<Node<S> *> &xs,
                                         std::vector<int> *lens) {
  int steps = static_cast<int>(xs.size());
  int half = CeilDiv(steps, 2);
  std::vector<Node<S> *> out(half);
  for (int m = 0; m < half; ++m) {
    Node<S> *second =
        (2 * m + 1 < steps)
            ? xs[2 * m + 1]
            : t.Constant(Mat<S>::Zero(xs[0]->Rows(), xs[0]->Cols()));
    out[m] = ConcatCols(t, xs[2 * m], second);
  }
  for (int &l : *lens) l = CeilDiv(l, 2);
  return out;
}

}  // namespace nn
}  // namespace vc

#endif  // VC_NN_LAYERS_H_
