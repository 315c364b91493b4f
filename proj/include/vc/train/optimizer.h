// vc/train/optimizer.h

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

#ifndef VC_TRAIN_OPTIMIZER_H_
#define VC_TRAIN_OPTIMIZER_H_

#include <cmath>
#include <iostream>
#include <vector>

#include "vc/ad/graph.h"
#include "vc/base/io.h"

namespace vc {
namespace train {

using ad::Tensor;

// Scales every gradient in the set so the joint L2 norm is at most max_norm.
// Returns the pre-clip norm.
template <typename S>
double ClipGradNorm(const std::vector<Tensor<S> *> &params, double max_norm) {
  double sq = 0.0;
  for (Tensor<S> *p : params) sq += static_cast<double>(p->grad.squaredNorm());
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    S scale = static_cast<S>(max_norm / norm);
    for (Tensor<S> *p : params) p->grad *= scale;
  }
  return norm;
}

// Adam with bias correction over one parameter group.  Step() consumes the
// gradients currently stored on the tensors; a zero gradient yields a zero
// update.
template <typename S>
class Adam {
 public:
  void Init(std::vector<Tensor<S> *> params, double beta1 = 0.9,
            double beta2 = 0.999, double eps = 1e-8) {
    params_ = std::move(params);
    beta1_ = beta1;
    beta2_ = beta2;
    eps_ = eps;
    t_ = 0;
    m_.clear();
    v_.clear();
    for (Tensor<S> *p : params_) {
      m_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void Step(double lr) {
    ++t_;
    S b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
    S c1 = static_cast<S>(1.0 - std::pow(beta1_, t_));
    S c2 = static_cast<S>(1.0 - std::pow(beta2_, t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      const Mat<S> &g = params_[i]->grad;
      m_[i] = b1 * m_[i] + (S(1) - b1) * g;
      v_[i] = b2 * v_[i] + (S(1) - b2) * g.cwiseProduct(g);
      Mat<S> mhat = m_[i] / c1;
      Mat<S> vhat = v_[i] / c2;
      params_[i]->value.array() -=
          static_cast<S>(lr) * mhat.array() /
          (vhat.array().sqrt() + static_cast<S>(eps_));
    }
  }

  int64_t t() const { return t_; }
  const std::vector<Tensor<S> *> &params() const { return params_; }

  void SaveState(std::ostream &os) const {
    WriteU32(os, static_cast<uint32_t>(t_));
    WriteU32(os, static_cast<uint32_t>(params_.size()));
    for (size_t i = 0; i < params_.size(); ++i) {
      WriteString(os, params_[i]->name);
      Matf m = m_[i].template cast<float>();
      Matf v = v_[i].template cast<float>();
      WriteMat(os, m);
      WriteMat(os, v);
    }
  }

  void LoadState(std::istream &is) {
    t_ = ReadU32(is);
    uint32_t n = ReadU32(is);
    VC_CHECK(n == params_.size(), "optimizer parameter count mismatch");
    for (size_t i = 0; i < params_.size(); ++i) {
      std::string name = ReadString(is);
      VC_CHECK(name == params_[i]->name,
               "optimizer state order mismatch: " + name);
      Matf m = ReadMat(is);
      Matf v = ReadMat(is);
      VC_CHECK(m.rows() == m_[i].rows() && m.cols() == m_[i].cols(),
               "optimizer moment shape mismatch: " + name);
      m_[i] = m.template cast<S>();
      v_[i] = v.template cast<S>();
    }
  }

 private:
  std::vector<Tensor<S> *> params_;
  std::vector<Mat<S>> m_, v_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int64_t t_ = 0;
};

}  // namespace train
}  // namespace vc

#endif  // VC_TRAIN_OPTIMIZER_H_
