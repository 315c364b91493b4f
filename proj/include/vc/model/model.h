// vc/model/model.h

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

#ifndef VC_MODEL_MODEL_H_
#define VC_MODEL_MODEL_H_

#include <algorithm>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "vc/nn/attention.h"
#include "vc/nn/layers.h"

namespace vc {
namespace model {

using ad::Node;
using ad::Tape;
using ad::Tensor;
using nn::ParamStore;

// Layer widths and structural knobs for all five components.  The "paper"
// preset follows the published table; "desk" halves every width so the test
// suite runs in minutes.
struct ModelConfig {
  int n_mels = 80;
  int inventory = 0;   // P, includes the end-of-sequence symbol
  int n_speakers = 0;  // S

  // Text encoder: 3 convolutions, BLSTM, FC-tanh.
  int te_conv_ch = 512;
  int te_conv_k = 5;
  int te_blstm = 256;
  int te_out = 512;

  // Recognition encoder: 2 pyramid BLSTM layers + attention decoder.
  int re_blstm = 256;
  int re_dec = 512;
  int re_embed = 256;
  int re_out = 512;
  int re_attn = 128;
  int re_loc_kernel = 31;
  int re_loc_ch = 32;
  int rec_cap_mult = 2;  // beam decode cap = mult * memory length + 5

  // Speaker encoder.
  int se_blstm = 128;
  int se_out = 128;

  // Auxiliary speaker classifier.
  int cs_hidden = 512;

  // Seq2seq decoder.
  int da_enc_blstm = 256;
  int da_prenet = 256;
  int da_lstm = 512;
  int da_postnet_ch = 512;
  int da_postnet_k = 5;
  int da_attn = 128;
  int da_loc_kernel = 31;
  int da_loc_ch = 32;
  int reduction = 2;

  double dropout = 0.5;
  double leaky_slope = 0.2;
  double stop_threshold = 0.5;
  int free_run_cap_mult = 10;  // cap = mult * N decoder steps
  bool dual_rc = true;         // reconstruction loss on pre+post postnet
  bool ct_mean = false;        // normalize L_CT by N^2 instead of raw sum

  static ModelConfig Paper(int inventory, int n_speakers) {
    ModelConfig c;
    c.inventory = inventory;
    c.n_speakers = n_speakers;
    return c;
  }

  static ModelConfig Desk(int inventory, int n_speakers) {
    ModelConfig c = Paper(inventory, n_speakers);
    c.te_conv_ch = 256;
    c.te_blstm = 128;
    c.te_out = 256;
    c.re_blstm = 128;
    c.re_dec = 256;
    c.re_embed = 128;
    c.re_out = 256;
    c.re_attn = 64;
    c.re_loc_ch = 16;
    c.se_blstm = 64;
    c.se_out = 64;
    c.cs_hidden = 256;
    c.da_enc_blstm = 128;
    c.da_prenet = 128;
    c.da_lstm = 256;
    c.da_postnet_ch = 256;
    c.da_attn = 64;
    c.da_loc_ch = 16;
    return c;
  }
};

// Model-facing padded batch in time-major layout.
template <typename S>
struct Batch {
  std::vector<std::vector<int>> phonemes;  // per utterance, EOS-terminated
  std::vector<int> phon_lens;
  std::vector<Mat<S>> mel_steps;  // M_max matrices of B x n_mels
  std::vector<int> mel_lens;
  std::vector<int> speakers;

  int BatchSize() const { return static_cast<int>(phonemes.size()); }
  int MaxPhonLen() const {
    return *std::max_element(phon_lens.begin(), phon_lens.end());
  }
  int MaxMelLen() const {
    return *std::max_element(mel_lens.begin(), mel_lens.end());
  }
};

template <typename S>
struct RunFlags {
  bool training = false;
  std::mt19937_64 *drop_rng = nullptr;
};

// ---------------------------------------------------------------------------
// Text encoder E^t

template <typename S>
class TextEncoder {
 public:
  void Build(const ModelConfig &cfg, std::mt19937_64 *rng) {
    cfg_ = cfg;
    for (int i = 0; i < 3; ++i) {
      int in = i == 0 ? cfg.inventory : cfg.te_conv_ch;
      conv_[i].Build(&params_, "et.conv" + std::to_string(i), in,
                     cfg.te_conv_ch, cfg.te_conv_k, rng);
      bn_[i].Build(&params_, "et.bn" + std::to_string(i), cfg.te_conv_ch);
    }
    blstm_.Build(&params_, "et.blstm", cfg.te_conv_ch, cfg.te_blstm, rng);
    out_.Build(&params_, "et.out", 2 * cfg.te_blstm, cfg.te_out, rng);
  }

  // Returns H^t in seg layout (sum(N_b) x te_out), rows in (-1, 1).
  Node<S> *Forward(Tape<S> &t, const std::vector<std::vector<int>> &phonemes,
                   const std::vector<int> &lens, const RunFlags<S> &run) const {
    int total = ad::TotalLen(lens);
    Mat<S> onehot = Mat<S>::Zero(total, cfg_.inventory);
    int r = 0;
    for (const auto &seq : phonemes)
      for (int id : seq) {
        VC_CHECK(id >= 0 && id < cfg_.inventory, "phoneme id out of range");
        onehot(r++, id) = S(1);
      }
    VC_CHECK(r == total, "phoneme lengths disagree with sequences");
    Node<S> *x = t.Constant(std::move(onehot));
    for (int i = 0; i < 3; ++i) {
      x = conv_[i].Forward(t, x, lens);
      x = bn_[i].Forward(t, x, run.training);
      x = Relu(t, x);
      x = Dropout(t, x, static_cast<S>(cfg_.dropout), run.drop_rng,
                  run.training);
    }
    int n_max = *std::max_element(lens.begin(), lens.end());
    std::vector<Node<S> *> steps(n_max);
    for (int n = 0; n < n_max; ++n) steps[n] = RowsAtStep(t, x, lens, n);
    std::vector<Node<S> *> hs = blstm_.Forward(t, steps, lens);
    Node<S> *seq = SegFromSteps(t, hs, lens);
    return Tanh(t, out_.Forward(t, seq));
  }

  ParamStore<S> &params() { return params_; }
  const ParamStore<S> &params() const { return params_; }

 private:
  ModelConfig cfg_;
  ParamStore<S> params_;
  nn::Conv1dSeg<S> conv_[3];
  nn::BatchNormLayer<S> bn_[3];
  nn::Blstm<S> blstm_;
  nn::Linear<S> out_;
};

// ---------------------------------------------------------------------------
// Recognition encoder E^r

template <typename S>
struct RecognitionResult {
  Node<S> *hr_seg = nullptr;      // sum(N_b) x re_out
  Node<S> *logits_seg = nullptr;  // sum(N_b) x P
  std::vector<Mat<S>> alignments;  // per utterance, N x T_mem
};

template <typename S>
struct BeamHypothesis {
  std::vector<int> phonemes;  // EOS-terminated unless truncated
  Mat<S> hr;                  // steps x re_out along this hypothesis
  Mat<S> alignment;           // steps x T_mem
  double log_prob = 0.0;
  bool truncated = false;
};

template <typename S>
class RecognitionEncoder {
 public:
  void Build(const ModelConfig &cfg, std::mt19937_64 *rng) {
    cfg_ = cfg;
    pyr1_.Build(&params_, "er.pyr1", 2 * cfg.n_mels, cfg.re_blstm, rng);
    pyr2_.Build(&params_, "er.pyr2", 4 * cfg.re_blstm, cfg.re_blstm, rng);
    embed_.Build(&params_, "er.embed", cfg.inventory + 1, cfg.re_embed, rng);
    dec_.Build(&params_, "er.dec", cfg.re_embed + 2 * cfg.re_blstm, cfg.re_dec,
               rng);
    attn_.Build(&params_, "er.attn", cfg.re_dec, 2 * cfg.re_blstm, cfg.re_attn,
                cfg.re_loc_kernel, cfg.re_loc_ch, false, rng);
    out_.Build(&params_, "er.out", cfg.re_dec + 2 * cfg.re_blstm, cfg.re_out,
               rng);
    logits_.Build(&params_, "er.logits", cfg.re_out, cfg.inventory, rng);
  }

  int BosId() const { return cfg_.inventory; }

  // Pyramid listener: mel steps (B x n_mels each) -> memory of length
  // ceil(M/4) with per-utterance lengths updated alongside.
  typename nn::Attention<S>::Memory Listen(Tape<S> &t,
                                           const std::vector<Node<S> *> &mel,
                                           std::vector<int> mel_lens) const {
    VC_CHECK(static_cast<int>(mel.size()) >= 4, "recognition needs M >= 4");
    std::vector<Node<S> *> x = nn::PairAdjacentSteps(t, mel, &mel_lens);
    x = pyr1_.Forward(t, x, mel_lens);
    x = nn::PairAdjacentSteps(t, x, &mel_lens);
    x = pyr2_.Forward(t, x, mel_lens);
    return attn_.Precompute(t, x, mel_lens);
  }

  // Teacher-forced pass: exactly N_b decoder steps per utterance, previous
  // input is the true previous phoneme (BOS at step 0).
  RecognitionResult<S> TeacherForward(
      Tape<S> &t, const std::vector<Node<S> *> &mel_steps,
      const std::vector<int> &mel_lens,
      const std::vector<std::vector<int>> &phonemes,
      const std::vector<int> &phon_lens) const {
    int bsz = static_cast<int>(phonemes.size());
    auto mem = Listen(t, mel_steps, mel_lens);
    int n_max = *std::max_element(phon_lens.begin(), phon_lens.end());
    auto masks = nn::StepMasks<S>(phon_lens, n_max);
    typename nn::LstmCell<S>::State st = dec_.Zero(t, bsz);
    Node<S> *align = attn_.InitialAlignment(t, mem);
    Node<S> *ctx = t.Constant(Mat<S>::Zero(bsz, 2 * cfg_.re_blstm));
    std::vector<Node<S> *> hr_steps(n_max);
    std::vector<Node<S> *> align_steps(n_max);
    for (int n = 0; n < n_max; ++n) {
      std::vector<int> prev(bsz);
      for (int b = 0; b < bsz; ++b)
        prev[b] = n == 0 ? BosId()
                         : (n - 1 < phon_lens[b] ? phonemes[b][n - 1] : BosId());
      Node<S> *e = embed_.Forward(t, prev);
      st = dec_.Step(t, ConcatCols(t, e, ctx), st, &masks[n]);
      auto ac = attn_.Step(t, mem, st.h, align);
      align = ac.first;
      ctx = ac.second;
      hr_steps[n] = Tanh(t, out_.Forward(t, ConcatCols(t, st.h, ctx)));
      align_steps[n] = align;
    }
    RecognitionResult<S> res;
    res.hr_seg = SegFromSteps(t, hr_steps, phon_lens);
    res.logits_seg = logits_.Forward(t, res.hr_seg);
    res.alignments.resize(bsz);
    for (int b = 0; b < bsz; ++b) {
      Mat<S> a(phon_lens[b], mem.t_max);
      for (int n = 0; n < phon_lens[b]; ++n)
        a.row(n) = align_steps[n]->val.row(b);
      res.alignments[b] = std::move(a);
    }
    return res;
  }

  // Beam search over phoneme hypotheses for a single utterance.  The
  // stepwise-argmax rollout always joins the candidate pool, so the returned
  // log-prob never falls below greedy.
  BeamHypothesis<S> BeamDecode(const Mat<S> &mel, int beam_width) const {
    VC_CHECK(beam_width >= 1, "beam width must be >= 1");
    Tape<S> t(false);
    int m = static_cast<int>(mel.rows());
    std::vector<Node<S> *> steps(m);
    for (int i = 0; i < m; ++i)
      steps[i] = t.Constant(Mat<S>(mel.row(i)));
    auto mem = Listen(t, steps, {m});
    int cap = cfg_.rec_cap_mult * mem.t_max + 5;

    struct Beam {
      typename nn::LstmCell<S>::State st;
      Node<S> *align = nullptr;
      Node<S> *ctx = nullptr;
      std::vector<int> seq;
      std::vector<Node<S> *> hr_rows;
      std::vector<Node<S> *> align_rows;
      double lp = 0.0;
      bool done = false;
      bool greedy = true;  // tracks the pure-argmax path
    };
    Beam init;
    init.st = dec_.Zero(t, 1);
    init.align = attn_.InitialAlignment(t, mem);
    init.ctx = t.Constant(Mat<S>::Zero(1, 2 * cfg_.re_blstm));
    std::vector<Beam> beams = {init};
    std::vector<Beam> finished;
    int eos = cfg_.inventory - 1;
    for (int step = 0; step < cap && !beams.empty(); ++step) {
      std::vector<Beam> cand;
      for (Beam &bm : beams) {
        int prev = bm.seq.empty() ? BosId() : bm.seq.back();
        Node<S> *e = embed_.Forward(t, {prev});
        auto st = dec_.Step(t, ConcatCols(t, e, bm.ctx), bm.st, nullptr);
        auto ac = attn_.Step(t, mem, st.h, bm.align);
        Node<S> *hr = Tanh(t, out_.Forward(t, ConcatCols(t, st.h, ac.second)));
        Node<S> *lg = logits_.Forward(t, hr);
        // Log-softmax over the inventory.
        Mat<S> z = lg->val;
        S mx = z.maxCoeff();
        double lse = 0.0;
        for (int j = 0; j < z.cols(); ++j)
          lse += std::exp(static_cast<double>(z(0, j) - mx));
        lse = std::log(lse) + static_cast<double>(mx);
        std::vector<int> order(z.cols());
        for (int j = 0; j < z.cols(); ++j) order[j] = j;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
          return z(0, a) > z(0, b);
        });
        int take = std::min<int>(beam_width, z.cols());
        for (int j = 0; j < take; ++j) {
          Beam nb;
          nb.st = st;
          nb.align = ac.first;
          nb.ctx = ac.second;
          nb.seq = bm.seq;
          nb.seq.push_back(order[j]);
          nb.hr_rows = bm.hr_rows;
          nb.hr_rows.push_back(hr);
          nb.align_rows = bm.align_rows;
          nb.align_rows.push_back(ac.first);
          nb.lp = bm.lp + static_cast<double>(z(0, order[j])) - lse;
          nb.greedy = bm.greedy && j == 0;
          if (order[j] == eos) {
            nb.done = true;
            finished.push_back(nb);
          } else {
            cand.push_back(nb);
          }
        }
      }
      std::sort(cand.begin(), cand.end(), [](const Beam &a, const Beam &b) {
        if (a.lp != b.lp) return a.lp > b.lp;
        return a.seq < b.seq;
      });
      beams.clear();
      for (Beam &bm : cand) {
        bool keep = static_cast<int>(beams.size()) < beam_width || bm.greedy;
        if (keep) beams.push_back(std::move(bm));
        if (static_cast<int>(beams.size()) >= beam_width + 1) break;
      }
    }
    const Beam *best = nullptr;
    for (const Beam &bm : finished)
      if (best == nullptr || bm.lp > best->lp) best = &bm;
    bool truncated = false;
    if (best == nullptr) {
      for (const Beam &bm : beams)
        if (best == nullptr || bm.lp > best->lp) best = &bm;
      truncated = true;
    }
    VC_CHECK(best != nullptr, "beam search produced no hypothesis");
    BeamHypothesis<S> hyp;
    hyp.phonemes = best->seq;
    hyp.log_prob = best->lp;
    hyp.truncated = truncated;
    int n = static_cast<int>(best->hr_rows.size());
    hyp.hr = Mat<S>(n, cfg_.re_out);
    hyp.alignment = Mat<S>(n, mem.t_max);
    for (int i = 0; i < n; ++i) {
      hyp.hr.row(i) = best->hr_rows[i]->val.row(0);
      hyp.alignment.row(i) = best->align_rows[i]->val.row(0);
    }
    return hyp;
  }

  ParamStore<S> &params() { return params_; }
  const ParamStore<S> &params() const { return params_; }

 private:
  ModelConfig cfg_;
  ParamStore<S> params_;
  nn::Blstm<S> pyr1_, pyr2_;
  nn::Embedding<S> embed_;
  nn::LstmCell<S> dec_;
  nn::Attention<S> attn_;
  nn::Linear<S> out_, logits_;
};

// ---------------------------------------------------------------------------
// Speaker encoder E^s

template <typename S>
struct SpeakerResult {
  Node<S> *embedding = nullptr;   // B x se_out, tanh output (pre-normalization)
  Node<S> *normalized = nullptr;  // B x se_out, unit rows
  Node<S> *logits = nullptr;      // B x n_speakers
};

template <typename S>
class SpeakerEncoder {
 public:
  void Build(const ModelConfig &cfg, std::mt19937_64 *rng) {
    cfg_ = cfg;
    l1_.Build(&params_, "es.l1", cfg.n_mels, cfg.se_blstm, rng);
    l2_.Build(&params_, "es.l2", 2 * cfg.se_blstm, cfg.se_blstm, rng);
    out_.Build(&params_, "es.out", 2 * cfg.se_blstm, cfg.se_out, rng);
    cls_.Build(&params_, "es.cls", cfg.se_out, cfg.n_speakers, rng);
  }

  SpeakerResult<S> Forward(Tape<S> &t, const std::vector<Node<S> *> &mel_steps,
                           const std::vector<int> &mel_lens) const {
    std::vector<Node<S> *> h = l1_.Forward(t, mel_steps, mel_lens);
    h = l2_.Forward(t, h, mel_lens);
    Node<S> *seg = SegFromSteps(t, h, mel_lens);
    Node<S> *pooled = SegMeanRows(t, seg, mel_lens);
    SpeakerResult<S> res;
    res.embedding = Tanh(t, out_.Forward(t, pooled));
    res.normalized = L2NormalizeRows(t, res.embedding);
    res.logits = cls_.Forward(t, res.embedding);
    return res;
  }

  ParamStore<S> &params() { return params_; }
  const ParamStore<S> &params() const { return params_; }

 private:
  ModelConfig cfg_;
  ParamStore<S> params_;
  nn::Blstm<S> l1_, l2_;
  nn::Linear<S> out_, cls_;
};

// ---------------------------------------------------------------------------
// Auxiliary speaker classifier C^s

template <typename S>
class SpeakerClassifier {
 public:
  void Build(const ModelConfig &cfg, std::mt19937_64 *rng) {
    cfg_ = cfg;
    for (int i = 0; i < 3; ++i) {
      int in = i == 0 ? cfg.re_out : cfg.cs_hidden;
      fc_[i].Build(&params_, "cs.fc" + std::to_string(i), in, cfg.cs_hidden,
                   rng);
      bn_[i].Build(&params_, "cs.bn" + std::to_string(i), cfg.cs_hidden);
    }
    head_.Build(&params_, "cs.head", cfg.cs_hidden, cfg.n_speakers, rng);
  }

  // Replaces the softmax head with a freshly initialized sigmoid head for
  // pair fine-tuning.
  void ResetBinaryHead(std::mt19937_64 *rng) {
    binary_ = true;
    head_.Build(&params_, "cs.head_bin", cfg_.cs_hidden, 1, rng);
  }

  bool binary() const { return binary_; }

  // H^r rows in, logits out: sum(N_b) x S, or x 1 in binary mode.
  Node<S> *Forward(Tape<S> &t, Node<S> *hr_seg, const RunFlags<S> &run) const {
    Node<S> *x = hr_seg;
    for (int i = 0; i < 3; ++i) {
      x = fc_[i].Forward(t, x);
      x = bn_[i].Forward(t, x, run.training);
      x = LeakyRelu(t, x, static_cast<S>(cfg_.leaky_slope));
    }
    return head_.Forward(t, x);
  }

  ParamStore<S> &params() { return params_; }
  const ParamStore<S> &params() const { return params_; }

 private:
  ModelConfig cfg_;
  ParamStore<S> params_;
  nn::Linear<S> fc_[3];
  nn::BatchNormLayer<S> bn_[3];
  nn::Linear<S> head_;
  bool binary_ = false;
};

// ---------------------------------------------------------------------------
// Seq2seq decoder D^a

template <typename S>
struct DecoderResult {
  Node<S> *pre_seg = nullptr;   // sum(M'_b) x n_mels, before postnet
  Node<S> *post_seg = nullptr;  // sum(M'_b) x n_mels, after residual postnet
  std::vector<int> out_lens;    // M'_b = 2 * ceil(M_b / 2)
  std::vector<Node<S> *> stop_steps;  // per decoder step, B x 1 logits
  std::vector<int> step_counts;       // K_b decoder steps per utterance
  std::vector<Mat<S>> alignments;     // per utterance, K_b x N_b (clipped)
};

template <typename S>
struct FreeRunResult {
  Mat<S> mel;        // M' x n_mels (post-postnet)
  Mat<S> alignment;  // steps x N
  int steps = 0;
  bool capped = false;
};

template <typename S>
class Decoder {
 public:
  void Build(const ModelConfig &cfg, std::mt19937_64 *rng) {
    cfg_ = cfg;
    int in_dim = cfg.te_out + cfg.se_out;
    enc_.Build(&params_, "da.enc", in_dim, cfg.da_enc_blstm, rng);
    int mem_dim = 2 * cfg.da_enc_blstm;
    pre1_.Build(&params_, "da.pre1", cfg.n_mels, cfg.da_prenet, rng);
    pre2_.Build(&params_, "da.pre2", cfg.da_prenet, cfg.da_prenet, rng);
    lstm1_.Build(&params_, "da.lstm1", cfg.da_prenet + mem_dim, cfg.da_lstm,
                 rng);
    lstm2_.Build(&params_, "da.lstm2", cfg.da_lstm + mem_dim, cfg.da_lstm, rng);
    attn_.Build(&params_, "da.attn", cfg.da_lstm, mem_dim, cfg.da_attn,
                cfg.da_loc_kernel, cfg.da_loc_ch, true, rng);
    frame_.Build(&params_, "da.frame", cfg.da_lstm + mem_dim,
                 cfg.reduction * cfg.n_mels, rng);
    stop_.Build(&params_, "da.stop", cfg.da_lstm + mem_dim, 1, rng);
    for (int i = 0; i < 5; ++i) {
      int in = i == 0 ? cfg.n_mels : cfg.da_postnet_ch;
      int out = i == 4 ? cfg.n_mels : cfg.da_postnet_ch;
      post_[i].Build(&params_, "da.post" + std::to_string(i), in, out,
                     cfg.da_postnet_k, rng);
      if (i < 4)
        pbn_[i].Build(&params_, "da.pbn" + std::to_string(i),
                      cfg.da_postnet_ch);
    }
  }

  // Encoder half: H rows (seg) + speaker embedding broadcast -> memory.
  typename nn::Attention<S>::Memory Encode(Tape<S> &t, Node<S> *h_seg,
                                           const std::vector<int> &lens,
                                           Node<S> *h_s) const {
    for (int b = 0; b < h_s->Rows(); ++b) {
      S n = h_s->val.row(b).norm();
      VC_CHECK(std::abs(static_cast<double>(n) - 1.0) < 1e-4,
               "speaker embedding must be L2-normalized");
    }
    Node<S> *joined = ConcatCols(t, h_seg, RepeatRowsSeg(t, h_s, lens));
    int n_max = *std::max_element(lens.begin(), lens.end());
    std::vector<Node<S> *> steps(n_max);
    for (int n = 0; n < n_max; ++n) steps[n] = RowsAtStep(t, joined, lens, n);
    std::vector<Node<S> *> enc = enc_.Forward(t, steps, lens);
    return attn_.Precompute(t, enc, lens);
  }

  // Teacher-forced decode over a padded batch.  mel_steps provide both the
  // prenet inputs and the reconstruction target.
  DecoderResult<S> TeacherForward(Tape<S> &t, Node<S> *h_seg,
                                  const std::vector<int> &h_lens,
                                  Node<S> *h_s,
                                  const std::vector<Mat<S>> &mel_steps,
                                  const std::vector<int> &mel_lens,
                                  const RunFlags<S> &run) const {
    int bsz = static_cast<int>(mel_lens.size());
    auto mem = Encode(t, h_seg, h_lens, h_s);
    DecoderResult<S> res;
    res.step_counts.resize(bsz);
    res.out_lens.resize(bsz);
    int k_max = 0;
    for (int b = 0; b < bsz; ++b) {
      res.step_counts[b] = CeilDiv(mel_lens[b], cfg_.reduction);
      res.out_lens[b] = cfg_.reduction * res.step_counts[b];
      k_max = std::max(k_max, res.step_counts[b]);
    }
    std::vector<int> step_lens = res.step_counts;
    auto masks = nn::StepMasks<S>(step_lens, k_max);
    typename nn::LstmCell<S>::State s1 = lstm1_.Zero(t, bsz);
    typename nn::LstmCell<S>::State s2 = lstm2_.Zero(t, bsz);
    Node<S> *align = attn_.InitialAlignment(t, mem);
    Node<S> *ctx = t.Constant(Mat<S>::Zero(bsz, 2 * cfg_.da_enc_blstm));
    std::vector<Node<S> *> frame_steps(k_max);
    std::vector<Node<S> *> align_steps(k_max);
    res.stop_steps.resize(k_max);
    for (int k = 0; k < k_max; ++k) {
      Mat<S> prev = Mat<S>::Zero(bsz, cfg_.n_mels);
      if (k > 0) {
        int idx = k * cfg_.reduction - 1;
        for (int b = 0; b < bsz; ++b)
          if (idx < mel_lens[b]) prev.row(b) = mel_steps[idx].row(b);
      }
      Node<S> *p = Prenet(t, t.Constant(std::move(prev)), run);
      s1 = lstm1_.Step(t, ConcatCols(t, p, ctx), s1, &masks[k]);
      auto ac = attn_.Step(t, mem, s1.h, align);
      align = ac.first;
      ctx = ac.second;
      s2 = lstm2_.Step(t, ConcatCols(t, s1.h, ctx), s2, &masks[k]);
      Node<S> *feat = ConcatCols(t, s2.h, ctx);
      frame_steps[k] = frame_.Forward(t, feat);
      res.stop_steps[k] = stop_.Forward(t, feat);
      align_steps[k] = align;
    }
    // Assemble per-utterance frame sequences and run the postnet.
    std::vector<Node<S> *> pre_utts(bsz);
    for (int b = 0; b < bsz; ++b) {
      Node<S> *rows = StackStepRows(t, frame_steps, b, res.step_counts[b]);
      pre_utts[b] = SplitRowChunks(t, rows, cfg_.reduction);
    }
    res.pre_seg = VStack(t, pre_utts);
    res.post_seg = Postnet(t, res.pre_seg, res.out_lens, run);
    res.alignments.resize(bsz);
    for (int b = 0; b < bsz; ++b) {
      Mat<S> a(res.step_counts[b], mem.t_max);
      for (int k = 0; k < res.step_counts[b]; ++k)
        a.row(k) = align_steps[k]->val.row(b);
      res.alignments[b] = std::move(a);
    }
    return res;
  }

  // Free-running decode for one utterance; stops on the stop predictor or at
  // free_run_cap_mult * N steps.
  FreeRunResult<S> FreeRun(Tape<S> &t, Node<S> *h_seg, int n_len,
                           Node<S> *h_s) const {
    auto mem = Encode(t, h_seg, {n_len}, h_s);
    int cap = cfg_.free_run_cap_mult * n_len;
    RunFlags<S> run;  // eval mode: prenet dropout off
    typename nn::LstmCell<S>::State s1 = lstm1_.Zero(t, 1);
    typename nn::LstmCell<S>::State s2 = lstm2_.Zero(t, 1);
    Node<S> *align = attn_.InitialAlignment(t, mem);
    Node<S> *ctx = t.Constant(Mat<S>::Zero(1, 2 * cfg_.da_enc_blstm));
    Node<S> *prev = t.Constant(Mat<S>::Zero(1, cfg_.n_mels));
    std::vector<Node<S> *> frame_steps;
    std::vector<Node<S> *> align_steps;
    FreeRunResult<S> res;
    for (int k = 0; k < cap; ++k) {
      Node<S> *p = Prenet(t, prev, run);
      s1 = lstm1_.Step(t, ConcatCols(t, p, ctx), s1, nullptr);
      auto ac = attn_.Step(t, mem, s1.h, align);
      align = ac.first;
      ctx = ac.second;
      s2 = lstm2_.Step(t, ConcatCols(t, s1.h, ctx), s2, nullptr);
      Node<S> *feat = ConcatCols(t, s2.h, ctx);
      Node<S> *frames = frame_.Forward(t, feat);
      frame_steps.push_back(frames);
      align_steps.push_back(align);
      prev = SliceCols(t, frames, (cfg_.reduction - 1) * cfg_.n_mels,
                       cfg_.n_mels);
      S stop_logit = stop_.Forward(t, feat)->val(0, 0);
      double stop_p = 1.0 / (1.0 + std::exp(-static_cast<double>(stop_logit)));
      if (stop_p > cfg_.stop_threshold) break;
      if (k + 1 == cap) res.capped = true;
    }
    res.steps = static_cast<int>(frame_steps.size());
    Node<S> *rows = StackStepRows(t, frame_steps, 0, res.steps);
    Node<S> *pre = SplitRowChunks(t, rows, cfg_.reduction);
    std::vector<int> out_lens = {res.steps * cfg_.reduction};
    Node<S> *post = Postnet(t, pre, out_lens, run);
    res.mel = post->val;
    res.alignment = Mat<S>(res.steps, mem.t_max);
    for (int k = 0; k < res.steps; ++k)
      res.alignment.row(k) = align_steps[k]->val.row(0);
    return res;
  }

  ParamStore<S> &params() { return params_; }
  const ParamStore<S> &params() const { return params_; }

 private:
  Node<S> *Prenet(Tape<S> &t, Node<S> *x, const RunFlags<S> &run) const {
    Node<S> *h = Relu(t, pre1_.Forward(t, x));
    h = Dropout(t, h, static_cast<S>(cfg_.dropout), run.drop_rng, run.training);
    h = Relu(t, pre2_.Forward(t, h));
    return Dropout(t, h, static_cast<S>(cfg_.dropout), run.drop_rng,
                   run.training);
  }

  Node<S> *Postnet(Tape<S> &t, Node<S> *pre_seg, const std::vector<int> &lens,
                   const RunFlags<S> &run) const {
    Node<S> *x = pre_seg;
    for (int i = 0; i < 5; ++i) {
      x = post_[i].Forward(t, x, lens);
      if (i < 4) {
        x = pbn_[i].Forward(t, x, run.training);
        x = Tanh(t, x);
        x = Dropout(t, x, static_cast<S>(cfg_.dropout), run.drop_rng,
                    run.training);
      }
    }
    return Add(t, pre_seg, x);
  }

  ModelConfig cfg_;
  ParamStore<S> params_;
  nn::Blstm<S> enc_;
  nn::Linear<S> pre1_, pre2_;
  nn::LstmCell<S> lstm1_, lstm2_;
  nn::Attention<S> attn_;
  nn::Linear<S> frame_, stop_;
  nn::Conv1dSeg<S> post_[5];
  nn::BatchNormLayer<S> pbn_[4];
};

// ---------------------------------------------------------------------------
// The full model

template <typename S>
struct Model {
  ModelConfig cfg;
  TextEncoder<S> et;
  RecognitionEncoder<S> er;
  SpeakerEncoder<S> es;
  SpeakerClassifier<S> cs;
  Decoder<S> da;
  std::vector<std::string> inventory_names;
  std::vector<std::string> speaker_names;

  void Build(const ModelConfig &c, uint64_t seed) {
    cfg = c;
    std::mt19937_64 rng = MakeRng(seed, kStreamInit, 0);
    et.Build(c, &rng);
    er.Build(c, &rng);
    es.Build(c, &rng);
    cs.Build(c, &rng);
    da.Build(c, &rng);
  }

  std::vector<ParamStore<S> *> Stores() {
    return {&et.params(), &er.params(), &es.params(), &cs.params(),
            &da.params()};
  }

  int64_t TotalParams() const {
    return et.params().TotalParams() + er.params().TotalParams() +
           es.params().TotalParams() + cs.params().TotalParams() +
           da.params().TotalParams();
  }
};

// Time-major constant nodes for a batch's mel frames.
template <typename S>
std::vector<Node<S> *> MelStepNodes(Tape<S> &t, const Batch<S> &batch) {
  std::vector<Node<S> *> steps(batch.mel_steps.size());
  for (size_t i = 0; i < batch.mel_steps.size(); ++i)
    steps[i] = t.Constant(batch.mel_steps[i]);
  return steps;
}

}  // namespace model
}  // namespace vc

#endif  // VC_MODEL_MODEL_H_
