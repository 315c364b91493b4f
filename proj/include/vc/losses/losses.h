// vc/losses/losses.h

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

#ifndef VC_LOSSES_LOSSES_H_
#define VC_LOSSES_LOSSES_H_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "vc/ad/ops.h"

namespace vc {
namespace losses {

using ad::Node;
using ad::Tape;

struct LossWeights {
  double w_ct = 30.0;
  double w_sc = 0.1;
  double w_adv = 20.0;
};

// Scalar values of the seven objectives plus the per-group weighted totals
// actually stepped by the optimizer.
struct LossReport {
  double l_tc = 0, l_ct = 0, l_adv = 0, l_sc = 0, l_se = 0, l_rc = 0, l_ed = 0;
  double total_et = 0, total_er = 0, total_es = 0, total_cs = 0, total_da = 0;
};

// Mean cross-entropy between softmax(logits) and the true phonemes over all
// valid positions in the batch.
template <typename S>
Node<S> *PhonemeClassificationLoss(Tape<S> &t, Node<S> *logits_seg,
                                   const std::vector<std::vector<int>> &phons,
                                   const std::vector<int> &lens) {
  int total = ad::TotalLen(lens);
  VC_CHECK(logits_seg->Rows() == total, "logit rows disagree with lengths");
  std::vector<int> targets;
  targets.reserve(total);
  for (size_t b = 0; b < phons.size(); ++b) {
    VC_CHECK(static_cast<int>(phons[b].size()) == lens[b],
             "phoneme sequence length mismatch");
    for (int id : phons[b]) targets.push_back(id);
  }
  std::vector<S> w(total, S(1) / S(total));
  return CeRowsWeighted(t, logits_seg, targets, w);
}

// Eq.-style contrastive loss between the two linguistic representations of
// the same utterances: per utterance, sum over all (m, n) pairs of
// I*d + (1-I)*max(1-d, 0) with d the squared distance of L2-normalized rows.
// mean_norm divides each utterance's term by N^2.
template <typename S>
Node<S> *ContrastiveLoss(Tape<S> &t, Node<S> *hr_seg, Node<S> *ht_seg,
                         const std::vector<int> &lens, bool mean_norm) {
  VC_CHECK(hr_seg->Rows() == ht_seg->Rows() &&
               hr_seg->Cols() == ht_seg->Cols(),
           "contrastive loss needs matching shapes");
  std::vector<int> offs = ad::Offsets(lens);
  std::vector<Node<S> *> terms;
  std::vector<S> coeff;
  for (size_t b = 0; b < lens.size(); ++b) {
    Node<S> *hr = L2NormalizeRows(t, SliceRows(t, hr_seg, offs[b], lens[b]));
    Node<S> *ht = L2NormalizeRows(t, SliceRows(t, ht_seg, offs[b], lens[b]));
    Node<S> *gram = MatMul(t, hr, Transpose(t, ht));
    terms.push_back(HingeContrastive(t, gram));
    coeff.push_back(mean_norm ? S(1) / S(lens[b] * lens[b]) : S(1));
  }
  return LinearCombine(t, terms, coeff);
}

// Mean over positions of the squared distance between the classifier
// posterior and the uniform distribution.
template <typename S>
Node<S> *AdversarialLoss(Tape<S> &t, Node<S> *cs_logits_seg) {
  int n = cs_logits_seg->Rows();
  int s = cs_logits_seg->Cols();
  VC_CHECK(s >= 2, "adversarial loss needs at least two classes");
  Node<S> *post = SoftmaxRows(t, cs_logits_seg);
  Node<S> *diff =
      Sub(t, post, t.Constant(Mat<S>::Constant(n, s, S(1) / S(s))));
  return Scale(t, SumAll(t, Square(t, diff)), S(1) / S(n));
}

// Mean cross-entropy of the classifier posteriors against the utterance's
// speaker, expanded to every valid position.
template <typename S>
Node<S> *SpeakerClassifierLoss(Tape<S> &t, Node<S> *cs_logits_seg,
                               const std::vector<int> &speakers,
                               const std::vector<int> &lens) {
  int total = ad::TotalLen(lens);
  VC_CHECK(cs_logits_seg->Rows() == total, "classifier rows mismatch");
  std::vector<int> targets;
  targets.reserve(total);
  for (size_t b = 0; b < lens.size(); ++b)
    targets.insert(targets.end(), lens[b], speakers[b]);
  std::vector<S> w(total, S(1) / S(total));
  return CeRowsWeighted(t, cs_logits_seg, targets, w);
}

// Binary (sigmoid) variant used during pair fine-tuning; labels are 0/1 per
// utterance.
template <typename S>
Node<S> *SpeakerClassifierLossBinary(Tape<S> &t, Node<S> *cs_logits_seg,
                                     const std::vector<int> &labels,
                                     const std::vector<int> &lens) {
  int total = ad::TotalLen(lens);
  VC_CHECK(cs_logits_seg->Rows() == total && cs_logits_seg->Cols() == 1,
           "binary classifier expects one logit per row");
  Vec<S> targets(total), w(total);
  int r = 0;
  for (size_t b = 0; b < lens.size(); ++b)
    for (int n = 0; n < lens[b]; ++n, ++r) {
      targets(r) = static_cast<S>(labels[b]);
      w(r) = S(1) / S(total);
    }
  return BinaryCeWeighted(t, cs_logits_seg, targets, w);
}

// Binary adversarial target during fine-tuning: posterior driven to 0.5.
// With S=2 collapsed to one sigmoid unit, ||e - p||^2 = 2*(p - 0.5)^2.
template <typename S>
Node<S> *AdversarialLossBinary(Tape<S> &t, Node<S> *cs_logits_seg) {
  int n = cs_logits_seg->Rows();
  VC_CHECK(cs_logits_seg->Cols() == 1, "binary adversarial expects one logit");
  Node<S> *p = Sigmoid(t, cs_logits_seg);
  Node<S> *diff = Sub(t, p, t.Constant(Mat<S>::Constant(n, 1, S(0.5))));
  return Scale(t, SumAll(t, Square(t, diff)), S(2) / S(n));
}

// Batch-mean cross-entropy of the speaker-encoder logits.
template <typename S>
Node<S> *SpeakerEmbeddingLoss(Tape<S> &t, Node<S> *logits,
                              const std::vector<int> &speakers) {
  int b = logits->Rows();
  VC_CHECK(static_cast<int>(speakers.size()) == b, "speaker count mismatch");
  std::vector<S> w(b, S(1) / S(b));
  return CeRowsWeighted(t, logits, speakers, w);
}

// Mean over valid frames of the per-frame L1 norm (sum over mel bins).
// pred_seg may carry reduction padding past each utterance's valid length.
template <typename S>
Node<S> *ReconstructionLoss(Tape<S> &t, Node<S> *pred_seg,
                            const Mat<S> &true_seg,
                            const std::vector<int> &out_lens,
                            const std::vector<int> &valid_lens) {
  VC_CHECK(pred_seg->Rows() == true_seg.rows() &&
               pred_seg->Cols() == true_seg.cols(),
           "reconstruction shapes disagree");
  VC_CHECK(pred_seg->Rows() == ad::TotalLen(out_lens),
           "reconstruction rows disagree with lengths");
  int total_valid = ad::TotalLen(valid_lens);
  Mat<S> w = Mat<S>::Zero(pred_seg->Rows(), pred_seg->Cols());
  int row = 0;
  for (size_t b = 0; b < out_lens.size(); ++b) {
    VC_CHECK(valid_lens[b] <= out_lens[b], "valid length exceeds output");
    w.block(row, 0, valid_lens[b], w.cols())
        .setConstant(S(1) / S(total_valid));
    row += out_lens[b];
  }
  Node<S> *diff = Abs(t, Sub(t, pred_seg, t.Constant(true_seg)));
  return WeightedSum(t, diff, w);
}

// Mean binary cross-entropy over all valid decoder steps; target 1 at each
// utterance's final step and 0 before it.
template <typename S>
Node<S> *StopLoss(Tape<S> &t, const std::vector<Node<S> *> &stop_steps,
                  const std::vector<int> &step_counts) {
  int bsz = static_cast<int>(step_counts.size());
  int total = ad::TotalLen(step_counts);
  std::vector<Node<S> *> cols;
  Vec<S> targets(total), w(total);
  int r = 0;
  for (int b = 0; b < bsz; ++b) {
    VC_CHECK(step_counts[b] >= 1 &&
                 step_counts[b] <= static_cast<int>(stop_steps.size()),
             "step count out of range");
    cols.push_back(StackStepRows(t, stop_steps, b, step_counts[b]));
    for (int k = 0; k < step_counts[b]; ++k, ++r) {
      targets(r) = k + 1 == step_counts[b] ? S(1) : S(0);
      w(r) = S(1) / S(total);
    }
  }
  return BinaryCeWeighted(t, VStack(t, cols), targets, w);
}

// Builds the aligned reconstruction target (utterance blocks of out_lens[b]
// rows, valid frames from the time-major batch mels, padding rows zero).
template <typename S>
Mat<S> MelTargetSeg(const std::vector<Mat<S>> &mel_steps,
                    const std::vector<int> &mel_lens,
                    const std::vector<int> &out_lens) {
  int cols = mel_steps.empty() ? 0 : static_cast<int>(mel_steps[0].cols());
  Mat<S> seg = Mat<S>::Zero(ad::TotalLen(out_lens), cols);
  int row = 0;
  for (size_t b = 0; b < out_lens.size(); ++b) {
    for (int m = 0; m < mel_lens[b]; ++m) seg.row(row + m) = mel_steps[m].row(b);
    row += out_lens[b];
  }
  return seg;
}

enum class LossId { kTc, kCt, kAdv, kSc, kSe, kRc, kEd };

// Algorithm-1 routing expressed as (loss, coefficient) lists per parameter
// group; the trainer combines loss nodes with exactly these coefficients and
// the report mirrors them numerically.
struct Routing {
  std::vector<std::pair<LossId, double>> et, er, es, cs, da;
};

inline Routing RoutingFor(const LossWeights &w, bool even_parity) {
  Routing r;
  r.et = {{LossId::kCt, w.w_ct}};
  if (even_parity) {
    r.et.push_back({LossId::kRc, 1.0});
    r.et.push_back({LossId::kEd, 1.0});
  }
  r.er = {{LossId::kTc, 1.0},
          {LossId::kCt, w.w_ct},
          {LossId::kAdv, w.w_adv}};
  if (!even_parity) {
    r.er.push_back({LossId::kRc, 1.0});
    r.er.push_back({LossId::kEd, 1.0});
  }
  r.es = {{LossId::kSe, 1.0}};
  r.cs = {{LossId::kSc, w.w_sc}};
  r.da = {{LossId::kRc, 1.0}, {LossId::kEd, 1.0}};
  return r;
}

inline double LossValue(const LossReport &rep, LossId id) {
  switch (id) {
    case LossId::kTc:
      return rep.l_tc;
    case LossId::kCt:
      return rep.l_ct;
    case LossId::kAdv:
      return rep.l_adv;
    case LossId::kSc:
      return rep.l_sc;
    case LossId::kSe:
      return rep.l_se;
    case LossId::kRc:
      return rep.l_rc;
    case LossId::kEd:
      return rep.l_ed;
  }
  return 0;
}

// Fills the per-group weighted totals of a report whose seven component
// losses are already set.
inline void Assemble(LossReport *rep, const LossWeights &w, bool even_parity) {
  const double vals[] = {rep->l_tc, rep->l_ct, rep->l_adv, rep->l_sc,
                         rep->l_se, rep->l_rc, rep->l_ed};
  for (double v : vals)
    VC_CHECK(std::isfinite(v), "loss component missing or non-finite");
  Routing r = RoutingFor(w, even_parity);
  auto total = [&](const std::vector<std::pair<LossId, double>> &terms) {
    double s = 0;
    for (const auto &[id, c] : terms) s += c * LossValue(*rep, id);
    return s;
  };
  rep->total_et = total(r.et);
  rep->total_er = total(r.er);
  rep->total_es = total(r.es);
  rep->total_cs = total(r.cs);
  rep->total_da = total(r.da);
}

}  // namespace losses
}  // namespace vc

#endif  // VC_LOSSES_LOSSES_H_
