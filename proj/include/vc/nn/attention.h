// vc/nn/attention.h

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

#ifndef VC_NN_ATTENTION_H_
#define VC_NN_ATTENTION_H_

#include <string>
#include <utility>
#include <vector>

#include "vc/nn/layers.h"

namespace vc {
namespace nn {

// Location-aware additive attention (optionally with the forward-attention
// recursion stacked on top).  Energies:
//   e(b, u) = v^T tanh(Wq q_b + Wm m_bu + Wf f_bu + bias)
// where f is a 1-D convolution of the previous alignment.
template <typename S>
struct Attention {
  Linear<S> query_proj;  // no bias
  Linear<S> mem_proj;    // carries the shared bias
  Linear<S> loc_proj;    // no bias
  Tensor<S> *v = nullptr;
  Tensor<S> *loc_kernel = nullptr;
  int loc_channels = 0;
  bool forward_mode = false;

  void Build(ParamStore<S> *ps, const std::string &name, int query_dim,
             int mem_dim, int attn_dim, int loc_kernel_size, int loc_ch,
             bool fwd, std::mt19937_64 *rng) {
    loc_channels = loc_ch;
    forward_mode = fwd;
    query_proj.Build(ps, name + ".q", query_dim, attn_dim, rng, false);
    mem_proj.Build(ps, name + ".m", mem_dim, attn_dim, rng, true);
    loc_proj.Build(ps, name + ".f", loc_ch, attn_dim, rng, false);
    v = ps->Add(name + ".v", attn_dim, 1, Init::kGlorot, rng);
    loc_kernel = ps->Add(name + ".lk", loc_kernel_size, loc_ch, Init::kGlorot, rng);
  }

  struct Memory {
    Node<S> *mem = nullptr;       // (B*T) x mem_dim block stack
    Node<S> *projected = nullptr; // (B*T) x attn_dim
    int batch = 0;
    int t_max = 0;
    Mat<S> mask;  // B x T validity
  };

  Memory Precompute(Tape<S> &t, const std::vector<Node<S> *> &enc_steps,
                    const std::vector<int> &lens) const {
    Memory m;
    m.batch = enc_steps.empty() ? 0 : enc_steps[0]->Rows();
    m.t_max = static_cast<int>(enc_steps.size());
    m.mem = StackTimeMajor(t, enc_steps);
    m.projected = mem_proj.Forward(t, m.mem);
    m.mask = Mat<S>::Zero(m.batch, m.t_max);
    for (int b = 0; b < m.batch; ++b)
      for (int u = 0; u < m.t_max && u < lens[b]; ++u) m.mask(b, u) = S(1);
    return m;
  }

  Node<S> *InitialAlignment(Tape<S> &t, const Memory &m) const {
    Mat<S> a = Mat<S>::Zero(m.batch, m.t_max);
    a.col(0).setOnes();
    return t.Constant(a);
  }

  // Returns (alignment B x T, context B x mem_dim).
  std::pair<Node<S> *, Node<S> *> Step(Tape<S> &t, const Memory &m,
                                       Node<S> *query,
                                       Node<S> *prev_align) const {
    Node<S> *q = RepeatRowsUniform(t, query_proj.Forward(t, query), m.t_max);
    Node<S> *f = loc_proj.Forward(
        t, ConvRows(t, prev_align, t.Param(*loc_kernel)));
    Node<S> *act = Tanh(t, Add(t, Add(t, q, f), m.projected));
    Node<S> *e = ColToAlign(t, MatMul(t, act, t.Param(*v)), m.batch, m.t_max);
    Node<S> *y = SoftmaxRows(t, e, m.mask);
    Node<S> *align = y;
    if (forward_mode) {
      Node<S> *spread = Add(t, prev_align, ShiftColsRight(t, prev_align));
      align = NormalizeRows(t, CMul(t, spread, y), S(1e-8));
    }
    Node<S> *ctx = AttnContext(t, m.mem, align);
    return {align, ctx};
  }
};

}  // namespace nn
}  // namespace vc

#endif  // VC_NN_ATTENTION_H_
