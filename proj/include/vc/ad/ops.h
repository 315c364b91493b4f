// vc/ad/ops.h

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

#ifndef VC_AD_OPS_H_
#define VC_AD_OPS_H_

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "vc/ad/graph.h"

namespace vc {
namespace ad {

// Segment bookkeeping for ragged batches stored as stacked rows.  seg row
// layout: utterance b occupies rows [offset[b], offset[b] + lens[b]).
inline std::vector<int> Offsets(const std::vector<int> &lens) {
  std::vector<int> off(lens.size());
  int acc = 0;
  for (size_t b = 0; b < lens.size(); ++b) {
    off[b] = acc;
    acc += lens[b];
  }
  return off;
}

inline int TotalLen(const std::vector<int> &lens) {
  int acc = 0;
  for (int l : lens) acc += l;
  return acc;
}

namespace detail {

template <typename S>
Node<S> *MakeOp(Tape<S> &t, Mat<S> val, std::vector<Node<S> *> parents,
                std::function<void(Node<S> &)> bp) {
  Node<S> *n = t.Alloc();
  n->val = std::move(val);
  if (t.grad_enabled()) {
    bool any = false;
    for (Node<S> *p : parents)
      if (p->needs_grad) any = true;
    if (any) {
      n->needs_grad = true;
      n->parents = std::move(parents);
      n->backprop = std::move(bp);
    }
  }
  return n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

template <typename S>
Node<S> *MatMul(Tape<S> &t, Node<S> *a, Node<S> *b) {
  VC_CHECK(a->Cols() == b->Rows(), "MatMul shape mismatch");
  Mat<S> v = a->val * b->val;
  return detail::MakeOp<S>(t, std::move(v), {a, b}, [a, b](Node<S> &self) {
    if (a->needs_grad) a->EnsureGrad().noalias() += self.grad * b->val.transpose();
    if (b->needs_grad) b->EnsureGrad().noalias() += a->val.transpose() * self.grad;
  });
}

// y = x * W + 1 b, with b of shape 1 x C.
template <typename S>
Node<S> *Affine(Tape<S> &t, Node<S> *x, Node<S> *w, Node<S> *b) {
  VC_CHECK(x->Cols() == w->Rows() && b->Rows() == 1 && b->Cols() == w->Cols(),
           "Affine shape mismatch");
  Mat<S> v = x->val * w->val;
  v.rowwise() += b->val.row(0);
  return detail::MakeOp<S>(t, std::move(v), {x, w, b}, [x, w, b](Node<S> &self) {
    if (x->needs_grad) x->EnsureGrad().noalias() += self.grad * w->val.transpose();
    if (w->needs_grad) w->EnsureGrad().noalias() += x->val.transpose() * self.grad;
    if (b->needs_grad) b->EnsureGrad().row(0) += self.grad.colwise().sum();
  });
}

template <typename S>
Node<S> *Transpose(Tape<S> &t, Node<S> *x) {
  Mat<S> v = x->val.transpose();
  return detail::MakeOp<S>(t, std::move(v), {x}, [x](Node<S> &self) {
    if (x->needs_grad) x->EnsureGrad() += self.grad.transpose();
  });
}

template <typename S>
Node<S> *Add(Tape<S> &t, Node<S> *a, Node<S> *b) {
  VC_CHECK(a->Rows() == b->Rows() && a->Cols() == b->Cols(), "Add shape mismatch");
  return detail::MakeOp<S>(t, Mat<S>(a->val + b->val), {a, b}, [a, b](Node<S> &self) {
    if (a->needs_grad) a->EnsureGrad() += self.grad;
    if (b->needs_grad) b->EnsureGrad() += self.grad;
  });
}

template <typename S>
Node<S> *Sub(Tape<S> &t, Node<S> *a, Node<S> *b) {
  VC_CHECK(a->Rows() == b->Rows() && a->Cols() == b->Cols(), "Sub shape mismatch");
  return detail::MakeOp<S>(t, Mat<S>(a->val - b->val), {a, b}, [a, b](Node<S> &self) {
    if (a->needs_grad) a->EnsureGrad() += self.grad;
    if (b->needs_grad) b->EnsureGrad() -= self.grad;
  });
}

template <typename S>
Node<S> *CMul(Tape<S> &t, Node<S> *a, Node<S> *b) {
  VC_CHECK(a->Rows() == b->Rows() && a->Cols() == b->Cols(), "CMul shape mismatch");
  return detail::MakeOp<S>(t, Mat<S>(a->val.cwiseProduct(b->val)), {a, b},
                           [a, b](Node<S> &self) {
    if (a->needs_grad) a->EnsureGrad() += self.grad.cwiseProduct(b->val);
    if (b->needs_grad) b->EnsureGrad() += self.grad.cwiseProduct(a->val);
  });
}

// y = alpha * x + beta, elementwise with scalar constants.
template <typename S>
Node<S> *Scale(Tape<S> &t, Node<S> *x, S alpha, S beta = S(0)) {
  Mat<S> v = (x->val.array() * alpha + beta).matrix();
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, alpha](Node<S> &self) {
    if (x->needs_grad) x->EnsureGrad() += alpha * self.grad;
  });
}

// y = sum_i coeff[i] * xs[i], all same shape.
template <typename S>
Node<S> *LinearCombine(Tape<S> &t, const std::vector<Node<S> *> &xs,
                       const std::vector<S> &coeff) {
  VC_CHECK(!xs.empty() && xs.size() == coeff.size(), "LinearCombine arity");
  Mat<S> v = Mat<S>::Zero(xs[0]->Rows(), xs[0]->Cols());
  for (size_t i = 0; i < xs.size(); ++i) {
    VC_CHECK(xs[i]->Rows() == v.rows() && xs[i]->Cols() == v.cols(),
             "LinearCombine shape mismatch");
    v += coeff[i] * xs[i]->val;
  }
  std::vector<Node<S> *> parents(xs.begin(), xs.end());
  return detail::MakeOp<S>(t, std::move(v), parents,
                           [xs, coeff](Node<S> &self) {
    for (size_t i = 0; i < xs.size(); ++i)
      if (xs[i]->needs_grad) xs[i]->EnsureGrad() += coeff[i] * self.grad;
  });
}

// y = diag(m) * x for a constant column vector m, i.e. row b scaled by m[b].
template <typename S>
Node<S> *ScaleRowsConst(Tape<S> &t, Node<S> *x, const Vec<S> &m) {
  VC_CHECK(static_cast<int>(m.size()) == x->Rows(), "ScaleRowsConst shape");
  Mat<S> v = m.asDiagonal() * x->val;
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, m](Node<S> &self) {
    if (x->needs_grad) x->EnsureGrad() += m.asDiagonal() * self.grad;
  });
}

// ---------------------------------------------------------------------------
// Elementwise nonlinearities

template <typename S>
Node<S> *Tanh(Tape<S> &t, Node<S> *x) {
  Mat<S> v = x->val.array().tanh().matrix();
  return detail::MakeOp<S>(t, std::move(v), {x}, [x](Node<S> &self) {
    if (x->needs_grad)
      x->EnsureGrad().array() +=
          self.grad.array() * (S(1) - self.val.array().square());
  });
}

template <typename S>
Node<S> *Sigmoid(Tape<S> &t, Node<S> *x) {
  Mat<S> v = (S(1) / (S(1) + (-x->val.array()).exp())).matrix();
  return detail::MakeOp<S>(t, std::move(v), {x}, [x](Node<S> &self) {
    if (x->needs_grad)
      x->EnsureGrad().array() +=
          self.grad.array() * self.val.array() * (S(1) - self.val.array());
  });
}

template <typename S>
Node<S> *Relu(Tape<S> &t, Node<S> *x) {
  Mat<S> v = x->val.cwiseMax(S(0));
  return detail::MakeOp<S>(t, std::move(v), {x}, [x](Node<S> &self) {
    if (x->needs_grad)
      x->EnsureGrad().array() +=
          self.grad.array() * (x->val.array() > S(0)).template cast<S>();
  });
}

template <typename S>
Node<S> *LeakyRelu(Tape<S> &t, Node<S> *x, S slope) {
  Mat<S> v = x->val.cwiseMax(slope * x->val);
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, slope](Node<S> &self) {
    if (x->needs_grad)
      x->EnsureGrad().array() +=
          self.grad.array() *
          (x->val.array() > S(0)).template cast<S>().max(slope);
  });
}

template <typename S>
Node<S> *Square(Tape<S> &t, Node<S> *x) {
  Mat<S> v = x->val.array().square().matrix();
  return detail::MakeOp<S>(t, std::move(v), {x}, [x](Node<S> &self) {
    if (x->needs_grad)
      x->EnsureGrad().array() += self.grad.array() * S(2) * x->val.array();
  });
}

template <typename S>
Node<S> *Abs(Tape<S> &t, Node<S> *x) {
  Mat<S> v = x->val.array().abs().matrix();
  return detail::MakeOp<S>(t, std::move(v), {x}, [x](Node<S> &self) {
    if (x->needs_grad)
      x->EnsureGrad().array() += self.grad.array() * x->val.array().sign();
  });
}

// ---------------------------------------------------------------------------
// Reductions

// L = sum_ij w_ij x_ij for a constant weight matrix, returned as 1 x 1.
template <typename S>
Node<S> *WeightedSum(Tape<S> &t, Node<S> *x, const Mat<S> &w) {
  VC_CHECK(w.rows() == x->val.rows() && w.cols() == x->val.cols(),
           "WeightedSum shape mismatch");
  Mat<S> v(1, 1);
  v(0, 0) = x->val.cwiseProduct(w).sum();
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, w](Node<S> &self) {
    if (x->needs_grad) x->EnsureGrad() += self.grad(0, 0) * w;
  });
}

template <typename S>
Node<S> *SumAll(Tape<S> &t, Node<S> *x) {
  Mat<S> v(1, 1);
  v(0, 0) = x->val.sum();
  return detail::MakeOp<S>(t, std::move(v), {x}, [x](Node<S> &self) {
    if (x->needs_grad)
      x->EnsureGrad().array() += self.grad(0, 0);
  });
}

// ---------------------------------------------------------------------------
// Shape ops

template <typename S>
Node<S> *ConcatCols(Tape<S> &t, Node<S> *a, Node<S> *b) {
  VC_CHECK(a->Rows() == b->Rows(), "ConcatCols row mismatch");
  Mat<S> v(a->Rows(), a->Cols() + b->Cols());
  v.leftCols(a->Cols()) = a->val;
  v.rightCols(b->Cols()) = b->val;
  return detail::MakeOp<S>(t, std::move(v), {a, b}, [a, b](Node<S> &self) {
    if (a->needs_grad) a->EnsureGrad() += self.grad.leftCols(a->Cols());
    if (b->needs_grad) b->EnsureGrad() += self.grad.rightCols(b->Cols());
  });
}

template <typename S>
Node<S> *ConcatCols3(Tape<S> &t, Node<S> *a, Node<S> *b, Node<S> *c) {
  return ConcatCols(t, ConcatCols(t, a, b), c);
}

template <typename S>
Node<S> *SliceCols(Tape<S> &t, Node<S> *x, int start, int n) {
  VC_CHECK(start >= 0 && start + n <= x->Cols(), "SliceCols out of range");
  Mat<S> v = x->val.middleCols(start, n);
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, start, n](Node<S> &self) {
    if (x->needs_grad) x->EnsureGrad().middleCols(start, n) += self.grad;
  });
}

template <typename S>
Node<S> *SliceRows(Tape<S> &t, Node<S> *x, int start, int n) {
  VC_CHECK(start >= 0 && start + n <= x->Rows(), "SliceRows out of range");
  Mat<S> v = x->val.middleRows(start, n);
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, start, n](Node<S> &self) {
    if (x->needs_grad) x->EnsureGrad().middleRows(start, n) += self.grad;
  });
}

template <typename S>
Node<S> *VStack(Tape<S> &t, const std::vector<Node<S> *> &xs) {
  VC_CHECK(!xs.empty(), "VStack of nothing");
  int rows = 0, cols = xs[0]->Cols();
  for (Node<S> *x : xs) {
    VC_CHECK(x->Cols() == cols, "VStack col mismatch");
    rows += x->Rows();
  }
  Mat<S> v(rows, cols);
  int r = 0;
  for (Node<S> *x : xs) {
    v.middleRows(r, x->Rows()) = x->val;
    r += x->Rows();
  }
  std::vector<Node<S> *> parents(xs.begin(), xs.end());
  return detail::MakeOp<S>(t, std::move(v), parents, [xs](Node<S> &self) {
    int r = 0;
    for (Node<S> *x : xs) {
      if (x->needs_grad) x->EnsureGrad() += self.grad.middleRows(r, x->Rows());
      r += x->Rows();
    }
  });
}

// y.row(i) = x.row(idx[i]); rows may repeat (embedding lookup).
template <typename S>
Node<S> *SelectRows(Tape<S> &t, Node<S> *x, const std::vector<int> &idx) {
  Mat<S> v(static_cast<int>(idx.size()), x->Cols());
  for (size_t i = 0; i < idx.size(); ++i) {
    VC_CHECK(idx[i] >= 0 && idx[i] < x->Rows(), "SelectRows index out of range");
    v.row(i) = x->val.row(idx[i]);
  }
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, idx](Node<S> &self) {
    if (!x->needs_grad) return;
    Mat<S> &g = x->EnsureGrad();
    for (size_t i = 0; i < idx.size(); ++i)
      g.row(idx[i]) += self.grad.row(i);
  });
}

// (R x (r*F)) -> ((r*R) x F), splitting each row into r consecutive rows.
template <typename S>
Node<S> *SplitRowChunks(Tape<S> &t, Node<S> *x, int r) {
  VC_CHECK(r >= 1 && x->Cols() % r == 0, "SplitRowChunks width not divisible");
  int f = x->Cols() / r;
  Mat<S> v(x->Rows() * r, f);
  for (int i = 0; i < x->Rows(); ++i)
    for (int j = 0; j < r; ++j)
      v.row(i * r + j) = x->val.block(i, j * f, 1, f);
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, r, f](Node<S> &self) {
    if (!x->needs_grad) return;
    Mat<S> &g = x->EnsureGrad();
    for (int i = 0; i < x->Rows(); ++i)
      for (int j = 0; j < r; ++j)
        g.block(i, j * f, 1, f) += self.grad.row(i * r + j);
  });
}

// ((B*T) x 1) -> (B x T), row-major unflatten of a stacked column.
template <typename S>
Node<S> *ColToAlign(Tape<S> &t, Node<S> *x, int b, int tt) {
  VC_CHECK(x->Cols() == 1 && x->Rows() == b * tt, "ColToAlign shape");
  Mat<S> v(b, tt);
  for (int i = 0; i < b; ++i)
    for (int u = 0; u < tt; ++u) v(i, u) = x->val(i * tt + u, 0);
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, b, tt](Node<S> &self) {
    if (!x->needs_grad) return;
    Mat<S> &g = x->EnsureGrad();
    for (int i = 0; i < b; ++i)
      for (int u = 0; u < tt; ++u) g(i * tt + u, 0) += self.grad(i, u);
  });
}

// (B x F) -> ((B*T) x F): row b repeated T times, block layout.
template <typename S>
Node<S> *RepeatRowsUniform(Tape<S> &t, Node<S> *x, int tt) {
  Mat<S> v(x->Rows() * tt, x->Cols());
  for (int b = 0; b < x->Rows(); ++b)
    v.middleRows(b * tt, tt).rowwise() = x->val.row(b);
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, tt](Node<S> &self) {
    if (!x->needs_grad) return;
    Mat<S> &g = x->EnsureGrad();
    for (int b = 0; b < x->Rows(); ++b)
      g.row(b) += self.grad.middleRows(b * tt, tt).colwise().sum();
  });
}

// (B x F) -> (sum(lens) x F): row b repeated lens[b] times (seg layout).
template <typename S>
Node<S> *RepeatRowsSeg(Tape<S> &t, Node<S> *x, const std::vector<int> &lens) {
  VC_CHECK(static_cast<int>(lens.size()) == x->Rows(), "RepeatRowsSeg batch");
  Mat<S> v(TotalLen(lens), x->Cols());
  std::vector<int> off = Offsets(lens);
  for (int b = 0; b < x->Rows(); ++b)
    v.middleRows(off[b], lens[b]).rowwise() = x->val.row(b);
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, lens, off](Node<S> &self) {
    if (!x->needs_grad) return;
    Mat<S> &g = x->EnsureGrad();
    for (int b = 0; b < x->Rows(); ++b)
      g.row(b) += self.grad.middleRows(off[b], lens[b]).colwise().sum();
  });
}

// ---------------------------------------------------------------------------
// Row-normalizing ops

// Row-wise softmax over entries where mask is nonzero; masked entries give 0.
// Pass an empty mask for the dense case.
template <typename S>
Node<S> *SoftmaxRows(Tape<S> &t, Node<S> *x, const Mat<S> &mask = Mat<S>()) {
  bool masked = mask.size() != 0;
  if (masked)
    VC_CHECK(mask.rows() == x->val.rows() && mask.cols() == x->val.cols(),
             "SoftmaxRows mask shape");
  Mat<S> v(x->Rows(), x->Cols());
  for (int i = 0; i < x->Rows(); ++i) {
    S mx = -std::numeric_limits<S>::infinity();
    for (int j = 0; j < x->Cols(); ++j)
      if (!masked || mask(i, j) != S(0)) mx = std::max(mx, x->val(i, j));
    VC_CHECK(mx > -std::numeric_limits<S>::infinity(),
             "SoftmaxRows fully masked row");
    S z = S(0);
    for (int j = 0; j < x->Cols(); ++j) {
      if (!masked || mask(i, j) != S(0)) {
        v(i, j) = std::exp(x->val(i, j) - mx);
        z += v(i, j);
      } else {
        v(i, j) = S(0);
      }
    }
    v.row(i) /= z;
  }
  return detail::MakeOp<S>(t, std::move(v), {x}, [x](Node<S> &self) {
    if (!x->needs_grad) return;
    Mat<S> &g = x->EnsureGrad();
    for (int i = 0; i < self.Rows(); ++i) {
      S dot = self.grad.row(i).dot(self.val.row(i));
      g.row(i) += (self.grad.row(i).array() - dot).matrix().cwiseProduct(
          self.val.row(i));
    }
  });
}

// y = x / (rowsum(x) + eps), for renormalizing attention products.
template <typename S>
Node<S> *NormalizeRows(Tape<S> &t, Node<S> *x, S eps) {
  Mat<S> v(x->Rows(), x->Cols());
  Vec<S> inv(x->Rows());
  for (int i = 0; i < x->Rows(); ++i) {
    inv(i) = S(1) / (x->val.row(i).sum() + eps);
    v.row(i) = x->val.row(i) * inv(i);
  }
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, inv](Node<S> &self) {
    if (!x->needs_grad) return;
    Mat<S> &g = x->EnsureGrad();
    for (int i = 0; i < self.Rows(); ++i) {
      S dot = self.grad.row(i).dot(x->val.row(i));
      g.row(i) += inv(i) * self.grad.row(i) -
                  (inv(i) * inv(i) * dot) * Mat<S>::Ones(1, self.Cols());
    }
  });
}

// Rows scaled to unit Euclidean norm.  Zero rows are an error.
template <typename S>
Node<S> *L2NormalizeRows(Tape<S> &t, Node<S> *x) {
  Mat<S> v(x->Rows(), x->Cols());
  Vec<S> inv(x->Rows());
  for (int i = 0; i < x->Rows(); ++i) {
    S n = x->val.row(i).norm();
    VC_CHECK(n > S(0), "L2NormalizeRows zero row");
    inv(i) = S(1) / n;
    v.row(i) = x->val.row(i) * inv(i);
  }
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, inv](Node<S> &self) {
    if (!x->needs_grad) return;
    Mat<S> &g = x->EnsureGrad();
    for (int i = 0; i < self.Rows(); ++i) {
      S dot = self.grad.row(i).dot(self.val.row(i));
      g.row(i) += inv(i) * (self.grad.row(i) - dot * self.val.row(i));
    }
  });
}

// Shift every row one position to the right, filling column 0 with zero.
template <typename S>
Node<S> *ShiftColsRight(Tape<S> &t, Node<S> *x) {
  Mat<S> v = Mat<S>::Zero(x->Rows(), x->Cols());
  if (x->Cols() > 1) v.rightCols(x->Cols() - 1) = x->val.leftCols(x->Cols() - 1);
  return detail::MakeOp<S>(t, std::move(v), {x}, [x](Node<S> &self) {
    if (!x->needs_grad) return;
    if (x->Cols() > 1)
      x->EnsureGrad().leftCols(x->Cols() - 1) +=
          self.grad.rightCols(x->Cols() - 1);
    else
      x->EnsureGrad();
  });
}

// ---------------------------------------------------------------------------
// Regularization

// Inverted dropout; identity when disabled or p == 0.  The mask is drawn from
// `rng` at build time, so the caller controls determinism.
template <typename S>
Node<S> *Dropout(Tape<S> &t, Node<S> *x, S p, std::mt19937_64 *rng,
                 bool enabled) {
  if (!enabled || p <= S(0)) return x;
  VC_CHECK(p < S(1), "Dropout rate must be < 1");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat<S> mask(x->Rows(), x->Cols());
  S keep = S(1) - p;
  for (int i = 0; i < x->Rows(); ++i)
    for (int j = 0; j < x->Cols(); ++j)
      mask(i, j) = (u(*rng) < static_cast<double>(keep)) ? S(1) / keep : S(0);
  Mat<S> v = x->val.cwiseProduct(mask);
  return detail::MakeOp<S>(t, std::move(v), {x}, [x, mask](Node<S> &self) {
    if (x->needs_grad) x->EnsureGrad() += self.grad.cwiseProduct(mask);
  });
}

// Copies the value and cuts the gradient path.
template <typename S>
Node<S> *Detach(Tape<S> &t, Node<S> *x) {
  return t.Constant(x->val);
}

// Batch normalization over rows.  In training mode the batch statistics are
// used and the running statistics (1 x C rows) are updated in place; in eval
// mode the running statistics are used.
template <typename S>
Node<S> *BatchNorm(Tape<S> &t, Node<S> *x, Node<S> *gamma, Node<S> *beta,
                   Mat<S> *run_mean, Mat<S> *run_var, bool training, S momentum,
                   S eps) {
  int c = x->Cols();
  VC_CHECK(gamma->Rows() == 1 && gamma->Cols() == c && beta->Rows() == 1 &&
               beta->Cols() == c,
           "BatchNorm affine shape");
  if (!training) {
    VC_CHECK(run_mean != nullptr && run_var != nullptr &&
                 run_mean->cols() == c && run_var->cols() == c,
             "BatchNorm eval needs running stats");
    Mat<S> xhat(x->Rows(), c);
    Vec<S> istd = (run_var->row(0).transpose().array() + eps).rsqrt();
    for (int j = 0; j < c; ++j)
      xhat.col(j) = (x->val.col(j).array() - (*run_mean)(0, j)) * istd(j);
    Mat<S> v(x->Rows(), c);
    for (int j = 0; j < c; ++j)
      v.col(j) = xhat.col(j) * gamma->val(0, j) +
                 Mat<S>::Constant(x->Rows(), 1, beta->val(0, j));
    return detail::MakeOp<S>(
        t, std::move(v), {x, gamma, beta},
        [x, gamma, beta, xhat, istd](Node<S> &self) {
          if (x->needs_grad) {
            Mat<S> &g = x->EnsureGrad();
            for (int j = 0; j < self.Cols(); ++j)
              g.col(j) += self.grad.col(j) * (gamma->val(0, j) * istd(j));
          }
          if (gamma->needs_grad)
            for (int j = 0; j < self.Cols(); ++j)
              gamma->EnsureGrad()(0, j) += self.grad.col(j).dot(xhat.col(j));
          if (beta->needs_grad)
            beta->EnsureGrad().row(0) += self.grad.colwise().sum();
        });
  }
  int r = x->Rows();
  VC_CHECK(r >= 2, "BatchNorm needs at least two rows in training mode");
  Vec<S> mu = x->val.colwise().mean().transpose();
  Mat<S> centered = x->val.rowwise() - mu.transpose();
  Vec<S> var = centered.array().square().colwise().mean().transpose();
  Vec<S> istd = (var.array() + eps).rsqrt();
  Mat<S> xhat = centered * istd.asDiagonal();
  if (run_mean != nullptr && run_var != nullptr) {
    run_mean->row(0) =
        (S(1) - momentum) * run_mean->row(0) + momentum * mu.transpose();
    run_var->row(0) =
        (S(1) - momentum) * run_var->row(0) + momentum * var.transpose();
  }
  Mat<S> v = xhat;
  for (int j = 0; j < c; ++j)
    v.col(j) = v.col(j) * gamma->val(0, j) +
               Mat<S>::Constant(r, 1, beta->val(0, j));
  return detail::MakeOp<S>(
      t, std::move(v), {x, gamma, beta},
      [x, gamma, beta, xhat, istd, r](Node<S> &self) {
        Mat<S> dxhat(r, self.Cols());
        for (int j = 0; j < self.Cols(); ++j)
          dxhat.col(j) = self.grad.col(j) * gamma->val(0, j);
        if (x->needs_grad) {
          Mat<S> &g = x->EnsureGrad();
          S inv_r = S(1) / S(r);
          for (int j = 0; j < self.Cols(); ++j) {
            S sum_d = dxhat.col(j).sum();
            S sum_dx = dxhat.col(j).dot(xhat.col(j));
            g.col(j) += istd(j) * inv_r *
                        (S(r) * dxhat.col(j).array() - sum_d -
                         xhat.col(j).array() * sum_dx)
                            .matrix();
          }
        }
        if (gamma->needs_grad)
          for (int j = 0; j < self.Cols(); ++j)
            gamma->EnsureGrad()(0, j) += self.grad.col(j).dot(xhat.col(j));
        if (beta->needs_grad)
          beta->EnsureGrad().row(0) += self.grad.colwise().sum();
      });
}

// ---------------------------------------------------------------------------
// Convolutions

// Unfolds a segmented row-stack for a SAME 1-D convolution with odd kernel
// size k: out row i of a segment holds the k taps around frame i, zeros
// outside the segment.  Follow with Affine against a (k*Cin) x Cout kernel.
template <typename S>
Node<S> *Unfold1dSeg(Tape<S> &t, Node<S> *x, const std::vector<int> &lens,
                     int k) {
  VC_CHECK(k % 2 == 1, "Unfold1dSeg wants an odd kernel");
  VC_CHECK(TotalLen(lens) == x->Rows(), "Unfold1dSeg length mismatch");
  int c = x->Cols(), half = k / 2;
  std::vector<int> off = Offsets(lens);
  Mat<S> v = Mat<S>::Zero(x->Rows(), k * c);
  for (size_t b = 0; b < lens.size(); ++b)
    for (int i = 0; i < lens[b]; ++i)
      for (int j = 0; j < k; ++j) {
        int src = i + j - half;
        if (src >= 0 && src < lens[b])
          v.block(off[b] + i, j * c, 1, c) = x->val.row(off[b] + src);
      }
  return detail::MakeOp<S>(t, std::move(v), {x},
                           [x, lens, off, k, c, half](Node<S> &self) {
    if (!x->needs_grad) return;
    Mat<S> &g = x->EnsureGrad();
    for (size_t b = 0; b < lens.size(); ++b)
      for (int i = 0; i < lens[b]; ++i)
        for (int j = 0; j < k; ++j) {
          int src = i + j - half;
          if (src >= 0 && src < lens[b])
            g.row(off[b] + src) += self.grad.block(off[b] + i, j * c, 1, c);
        }
  });
}

// SAME 1-D convolution over each row of x (independent sequences of scalars),
// producing c output channels per position: y((b*T)+u, ch).  Used for
// location features over attention weights.  kernel is k x c.
template <typename S>
Node<S> *ConvRows(Tape<S> &t, Node<S> *x, Node<S> *kernel) {
  int k = kernel->Rows(), c = kernel->Cols(), half = k / 2;
  VC_CHECK(k % 2 == 1, "ConvRows wants an odd kernel");
  int b = x->Rows(), tt = x->Cols();
  Mat<S> v = Mat<S>::Zero(b * tt, c);
  for (int i = 0; i < b; ++i)
    for (int u = 0; u < tt; ++u)
      for (int j = 0; j < k; ++j) {
        int src = u + j - half;
        if (src >= 0 && src < tt)
          v.row(i * tt + u) += x->val(i, src) * kernel->val.row(j);
      }
  return detail::MakeOp<S>(t, std::move(v), {x, kernel},
                           [x, kernel, k, half, b, tt](Node<S> &self) {
    for (int i = 0; i < b; ++i)
      for (int u = 0; u < tt; ++u)
        for (int j = 0; j < k; ++j) {
          int src = u + j - half;
          if (src < 0 || src >= tt) continue;
          if (x->needs_grad)
            x->EnsureGrad()(i, src) +=
                self.grad.row(i * tt + u).dot(kernel->val.row(j));
          if (kernel->needs_grad)
            kernel->EnsureGrad().row(j) +=
                x->val(i, src) * self.grad.row(i * tt + u);
        }
  });
}

// ---------------------------------------------------------------------------
// Ragged sequence plumbing

// Picks row n of every segment: out.row(b) = seg.row(off[b] + n) when
// n < lens[b], zeros otherwise.
template <typename S>
Node<S> *RowsAtStep(Tape<S> &t, Node<S> *seg, const std::vector<int> &lens,
                    int n) {
  std::vector<int> off = Offsets(lens);
  int b = static_cast<int>(lens.size());
  Mat<S> v = Mat<S>::Zero(b, seg->Cols());
  for (int i = 0; i < b; ++i)
    if (n < lens[i]) v.row(i) = seg->val.row(off[i] + n);
  return detail::MakeOp<S>(t, std::move(v), {seg},
                           [seg, lens, off, n](Node<S> &self) {
    if (!seg->needs_grad) return;
    Mat<S> &g = seg->EnsureGrad();
    for (size_t i = 0; i < lens.size(); ++i)
      if (n < lens[i]) g.row(off[i] + n) += self.grad.row(i);
  });
}

// Gathers the valid rows of time-major steps (each B x F) into seg layout.
template <typename S>
Node<S> *SegFromSteps(Tape<S> &t, const std::vector<Node<S> *> &steps,
                      const std::vector<int> &lens) {
  VC_CHECK(!steps.empty(), "SegFromSteps with no steps");
  int b = steps[0]->Rows(), f = steps[0]->Cols();
  int max_len = *std::max_element(lens.begin(), lens.end());
  VC_CHECK(static_cast<int>(lens.size()) == b &&
               static_cast<int>(steps.size()) >= max_len,
           "SegFromSteps shape mismatch");
  std::vector<int> off = Offsets(lens);
  Mat<S> v(TotalLen(lens), f);
  for (int i = 0; i < b; ++i)
    for (int n = 0; n < lens[i]; ++n) v.row(off[i] + n) = steps[n]->val.row(i);
  std::vector<Node<S> *> parents(steps.begin(), steps.end());
  return detail::MakeOp<S>(t, std::move(v), parents,
                           [steps, lens, off](Node<S> &self) {
    for (size_t i = 0; i < lens.size(); ++i)
      for (int n = 0; n < lens[i]; ++n)
        if (steps[n]->needs_grad)
          steps[n]->EnsureGrad().row(i) += self.grad.row(off[i] + n);
  });
}

// Stacks row b of each step into a (steps x F) sequence for one utterance.
template <typename S>
Node<S> *StackStepRows(Tape<S> &t, const std::vector<Node<S> *> &steps, int b,
                       int count) {
  VC_CHECK(count >= 1 && count <= static_cast<int>(steps.size()),
           "StackStepRows count");
  int f = steps[0]->Cols();
  Mat<S> v(count, f);
  for (int n = 0; n < count; ++n) v.row(n) = steps[n]->val.row(b);
  std::vector<Node<S> *> parents(steps.begin(), steps.begin() + count);
  return detail::MakeOp<S>(t, std::move(v), parents,
                           [steps, b, count](Node<S> &self) {
    for (int n = 0; n < count; ++n)
      if (steps[n]->needs_grad)
        steps[n]->EnsureGrad().row(b) += self.grad.row(n);
  });
}

// Stacks time-major steps into a block layout: out.row(b*T + n) = step n row
// b, T = steps.size().
template <typename S>
Node<S> *StackTimeMajor(Tape<S> &t, const std::vector<Node<S> *> &steps) {
  VC_CHECK(!steps.empty(), "StackTimeMajor with no steps");
  int b = steps[0]->Rows(), f = steps[0]->Cols();
  int tt = static_cast<int>(steps.size());
  Mat<S> v(b * tt, f);
  for (int n = 0; n < tt; ++n)
    for (int i = 0; i < b; ++i) v.row(i * tt + n) = steps[n]->val.row(i);
  std::vector<Node<S> *> parents(steps.begin(), steps.end());
  return detail::MakeOp<S>(t, std::move(v), parents,
                           [steps, b, tt](Node<S> &self) {
    for (int n = 0; n < tt; ++n)
      if (steps[n]->needs_grad)
        for (int i = 0; i < b; ++i)
          steps[n]->EnsureGrad().row(i) += self.grad.row(i * tt + n);
  });
}

// Mean over the valid rows of every segment: out.row(b) = mean of rows
// [off[b], off[b]+lens[b]).
template <typename S>
Node<S> *SegMeanRows(Tape<S> &t, Node<S> *seg, const std::vector<int> &lens) {
  std::vector<int> off = Offsets(lens);
  int b = static_cast<int>(lens.size());
  VC_CHECK(TotalLen(lens) == seg->Rows(), "SegMeanRows length mismatch");
  Mat<S> v(b, seg->Cols());
  for (int i = 0; i < b; ++i) {
    VC_CHECK(lens[i] > 0, "SegMeanRows empty segment");
    v.row(i) = seg->val.middleRows(off[i], lens[i]).colwise().mean();
  }
  return detail::MakeOp<S>(t, std::move(v), {seg},
                           [seg, lens, off](Node<S> &self) {
    if (!seg->needs_grad) return;
    Mat<S> &g = seg->EnsureGrad();
    for (size_t i = 0; i < lens.size(); ++i) {
      Mat<S> share = self.grad.row(i) / S(lens[i]);
      g.middleRows(off[i], lens[i]).rowwise() += share.row(0);
    }
  });
}

// Attention readout: ctx.row(b) = sum_u alpha(b, u) * mem.row(b*T + u).
template <typename S>
Node<S> *AttnContext(Tape<S> &t, Node<S> *mem, Node<S> *alpha) {
  int b = alpha->Rows(), tt = alpha->Cols();
  VC_CHECK(mem->Rows() == b * tt, "AttnContext memory shape");
  Mat<S> v = Mat<S>::Zero(b, mem->Cols());
  for (int i = 0; i < b; ++i)
    v.row(i) = alpha->val.row(i) * mem->val.middleRows(i * tt, tt);
  return detail::MakeOp<S>(t, std::move(v), {mem, alpha},
                           [mem, alpha, b, tt](Node<S> &self) {
    for (int i = 0; i < b; ++i) {
      if (alpha->needs_grad)
        alpha->EnsureGrad().row(i) +=
            self.grad.row(i) * mem->val.middleRows(i * tt, tt).transpose();
      if (mem->needs_grad)
        mem->EnsureGrad().middleRows(i * tt, tt).noalias() +=
            alpha->val.row(i).transpose() * self.grad.row(i);
    }
  });
}

// ---------------------------------------------------------------------------
// Loss heads

// Sum_i w[i] * cross_entropy(softmax(logits.row(i)), targets[i]).  Rows with
// w[i] == 0 are skipped and may carry target -1.
template <typename S>
Node<S> *CeRowsWeighted(Tape<S> &t, Node<S> *logits,
                        const std::vector<int> &targets,
                        const std::vector<S> &w) {
  int r = logits->Rows(), c = logits->Cols();
  VC_CHECK(static_cast<int>(targets.size()) == r &&
               static_cast<int>(w.size()) == r,
           "CeRowsWeighted arity");
  Mat<S> post(r, c);
  S loss = S(0);
  for (int i = 0; i < r; ++i) {
    if (w[i] == S(0)) {
      post.row(i).setZero();
      continue;
    }
    VC_CHECK(targets[i] >= 0 && targets[i] < c, "CeRowsWeighted target range");
    S mx = logits->val.row(i).maxCoeff();
    Mat<S> e = (logits->val.row(i).array() - mx).exp().matrix();
    S z = e.sum();
    post.row(i) = e / z;
    loss += w[i] * (std::log(z) + mx - logits->val(i, targets[i]));
  }
  Mat<S> v(1, 1);
  v(0, 0) = loss;
  return detail::MakeOp<S>(t, std::move(v), {logits},
                           [logits, targets, w, post](Node<S> &self) {
    if (!logits->needs_grad) return;
    Mat<S> &g = logits->EnsureGrad();
    S s = self.grad(0, 0);
    for (size_t i = 0; i < targets.size(); ++i) {
      if (w[i] == S(0)) continue;
      g.row(i) += (s * w[i]) * post.row(i);
      g(i, targets[i]) -= s * w[i];
    }
  });
}

// Sum_i w[i] * BCE(sigmoid(logits[i]), targets[i]) on an R x 1 logit column.
template <typename S>
Node<S> *BinaryCeWeighted(Tape<S> &t, Node<S> *logits, const Vec<S> &targets,
                          const Vec<S> &w) {
  int r = logits->Rows();
  VC_CHECK(logits->Cols() == 1 && targets.size() == r && w.size() == r,
           "BinaryCeWeighted arity");
  S loss = S(0);
  Vec<S> sig(r);
  for (int i = 0; i < r; ++i) {
    S z = logits->val(i, 0);
    sig(i) = S(1) / (S(1) + std::exp(-z));
    if (w(i) == S(0)) continue;
    S sp = std::max(z, S(0)) + std::log1p(std::exp(-std::abs(z)));
    loss += w(i) * (sp - targets(i) * z);
  }
  Mat<S> v(1, 1);
  v(0, 0) = loss;
  return detail::MakeOp<S>(t, std::move(v), {logits},
                           [logits, targets, w, sig](Node<S> &self) {
    if (!logits->needs_grad) return;
    Mat<S> &g = logits->EnsureGrad();
    S s = self.grad(0, 0);
    for (int i = 0; i < sig.size(); ++i)
      if (w(i) != S(0)) g(i, 0) += s * w(i) * (sig(i) - targets(i));
  });
}

// Contrastive hinge on a Gram matrix of L2-normalized rows: with
// d = 2 - 2 G, L = sum_n d(n, n) + sum_{m != n} max(0, 1 - d(m, n)).
template <typename S>
Node<S> *HingeContrastive(Tape<S> &t, Node<S> *g) {
  int n = g->Rows();
  VC_CHECK(g->Cols() == n, "HingeContrastive wants a square Gram matrix");
  S loss = S(0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      S d = S(2) - S(2) * g->val(i, j);
      if (i == j)
        loss += d;
      else
        loss += std::max(S(0), S(1) - d);
    }
  Mat<S> v(1, 1);
  v(0, 0) = loss;
  return detail::MakeOp<S>(t, std::move(v), {g}, [g, n](Node<S> &self) {
    if (!g->needs_grad) return;
    Mat<S> &gg = g->EnsureGrad();
    S s = self.grad(0, 0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        S d = S(2) - S(2) * g->val(i, j);
        if (i == j)
          gg(i, j) -= S(2) * s;
        else if (S(1) - d > S(0))
          gg(i, j) += S(2) * s;
      }
  });
}

}  // namespace ad
}  // namespace vc

#endif  // VC_AD_OPS_H_
