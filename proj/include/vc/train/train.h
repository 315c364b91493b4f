// vc/train/train.h

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

#ifndef VC_TRAIN_TRAIN_H_
#define VC_TRAIN_TRAIN_H_

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vc/base/rng.h"
#include "vc/corpus/corpus.h"
#include "vc/eval/metrics.h"
#include "vc/losses/losses.h"
#include "vc/model/checkpoint.h"
#include "vc/model/model.h"
#include "vc/train/optimizer.h"

namespace vc {
namespace train {

using ad::Node;
using ad::Tape;
using ad::Tensor;

// Alternating pre-training and pair fine-tuning.  One optimizer step per
// parameter group per iteration; the decoder consumes the text embeddings on
// even global iterations and the recognition embeddings on odd ones.

struct TrainConfig {
  losses::LossWeights weights;  // w_ct, w_sc, w_adv
  int batch_size = 32;
  double lr = 1e-3;
  bool halve_lr = false;  // fixed schedule when false
  int halve_every = 7;    // epochs per halving when halve_lr
  int epochs = 80;
  double clip_norm = 1.0;      // <= 0 disables clipping
  double val_fraction = 0.1;   // <= 0 disables the validation split
  uint64_t seed = 1;
  // Ablation switches.
  bool no_adv = false;   // skip C^s and the adversarial objective
  bool no_ct = false;    // keep the text path but weight L_CT by zero
  bool no_text = false;  // drop E^t, L_CT, and the text path entirely
  bool no_pretrain = false;  // fine-tune from random initialization

  static TrainConfig Pretrain() { return TrainConfig(); }

  static TrainConfig Finetune() {
    TrainConfig c;
    c.batch_size = 8;
    c.halve_lr = true;
    c.epochs = 30;
    c.weights.w_adv = 0.2;
    return c;
  }
};

inline double LrAt(const TrainConfig &cfg, int epoch) {
  VC_CHECK(epoch >= 0, "negative epoch");
  if (!cfg.halve_lr) return cfg.lr;
  return cfg.lr * std::pow(0.5, epoch / cfg.halve_every);
}

// Loss weights after applying the ablation switches.
inline losses::LossWeights EffectiveWeights(const TrainConfig &cfg) {
  losses::LossWeights w = cfg.weights;
  if (cfg.no_ct || cfg.no_text) w.w_ct = 0.0;
  if (cfg.no_adv) {
    w.w_adv = 0.0;
    w.w_sc = 0.0;
  }
  return w;
}

// One parameter group: harvested gradients are stashed per loss pass, then
// restored for a single optimizer step at the end of the iteration.
template <typename S>
struct Group {
  std::string name;
  std::vector<Tensor<S> *> params;
  Adam<S> adam;
  std::vector<Mat<S>> stash;
  double grad_norm = 0.0;  // pre-clip norm of the last applied step

  void Init(std::string n, std::vector<Tensor<S> *> ps) {
    name = std::move(n);
    params = std::move(ps);
    adam.Init(params);
    stash.clear();
    for (Tensor<S> *p : params)
      stash.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
  }

  void ClearStash() {
    for (auto &m : stash) m.setZero();
  }
  void StashGrads() {
    for (size_t i = 0; i < params.size(); ++i) stash[i] += params[i]->grad;
  }
  void RestoreGrads() {
    for (size_t i = 0; i < params.size(); ++i) params[i]->grad = stash[i];
  }
};

// Mutable training state: the model, the per-group optimizers, and (for
// fine-tuning) the trainable speaker-embedding table replacing E^s.
template <typename S>
struct TrainSession {
  model::Model<S> *m = nullptr;
  bool finetune = false;
  nn::ParamStore<S> ft_store;
  Tensor<S> *ft_embed = nullptr;  // speakers x se_out, raw (normalized in graph)
  std::vector<std::string> ft_speakers;
  std::vector<Group<S>> groups;
  int64_t iter = 0;

  static TrainSession ForPretrain(model::Model<S> *m) {
    TrainSession s;
    s.m = m;
    s.groups.resize(5);
    s.groups[0].Init("et", m->et.params().Trainable());
    s.groups[1].Init("er", m->er.params().Trainable());
    s.groups[2].Init("es", m->es.params().Trainable());
    s.groups[3].Init("cs", m->cs.params().Trainable());
    s.groups[4].Init("da", m->da.params().Trainable());
    return s;
  }

  static TrainSession ForFinetune(model::Model<S> *m,
                                  const model::FinetuneBlob<S> &blob) {
    VC_CHECK(m->cs.binary(), "fine-tuning needs the binary classifier head");
    VC_CHECK(blob.embed.rows() == 2, "pair fine-tuning expects two speakers");
    VC_CHECK(blob.speakers.size() == 2, "speaker name count mismatch");
    TrainSession s;
    s.m = m;
    s.finetune = true;
    s.ft_speakers = blob.speakers;
    Tensor<S> *e = s.ft_store.Add("ft.embed",
                                  static_cast<int>(blob.embed.rows()),
                                  static_cast<int>(blob.embed.cols()),
                                  nn::Init::kZero, nullptr);
    e->value = blob.embed;
    s.ft_embed = e;
    s.groups.resize(5);
    s.groups[0].Init("et", m->et.params().Trainable());
    s.groups[1].Init("er", m->er.params().Trainable());
    s.groups[2].Init("cs", m->cs.params().Trainable());
    s.groups[3].Init("da", m->da.params().Trainable());
    s.groups[4].Init("ft", s.ft_store.Trainable());
    return s;
  }

  Group<S> *Find(const std::string &name) {
    for (auto &g : groups)
      if (g.name == name) return &g;
    return nullptr;
  }

  std::vector<nn::ParamStore<S> *> AllStores() {
    std::vector<nn::ParamStore<S> *> out = m->Stores();
    if (finetune) out.push_back(&ft_store);
    return out;
  }

  model::FinetuneBlob<S> Blob() const {
    VC_CHECK(finetune, "no embedding table outside fine-tuning");
    model::FinetuneBlob<S> b;
    b.speakers = ft_speakers;
    b.embed = ft_embed->value;
    return b;
  }
};

// MakeBatch produces Real mels; training code may run at another scalar.
template <typename S>
model::Batch<S> CastBatch(const model::Batch<Real> &b) {
  if constexpr (std::is_same_v<S, Real>) {
    return b;
  } else {
    model::Batch<S> out;
    out.phonemes = b.phonemes;
    out.phon_lens = b.phon_lens;
    out.mel_lens = b.mel_lens;
    out.speakers = b.speakers;
    out.mel_steps.reserve(b.mel_steps.size());
    for (const auto &m : b.mel_steps)
      out.mel_steps.push_back(m.template cast<S>());
    return out;
  }
}

struct StepRecord {
  losses::LossReport report;
  int64_t iter = 0;
  int epoch = 0;
  bool even = false;       // global-iteration parity
  bool text_path = false;  // decoder consumed H^t this step
  double lr = 0.0;
  double gnorm_et = 0, gnorm_er = 0, gnorm_es = 0, gnorm_cs = 0, gnorm_da = 0,
         gnorm_ft = 0;
};

// One Algorithm-1 iteration: a single forward pass, three gradient harvests
// (w_sc*L_SC for C^s; L_SE for E^s; the combined decoder/recognition loss for
// E^t, E^r, D^a), then one Adam step per group.  The decoder's input choice
// routes L_RC and L_ED to E^t on text-path steps and E^r on audio-path steps.
template <typename S>
StepRecord Step(TrainSession<S> &sess, const model::Batch<S> &batch,
                const TrainConfig &cfg, double lr,
                const std::string &batch_tag) {
  try {
    model::Model<S> &m = *sess.m;
    bool even = sess.iter % 2 == 0;
    bool text_path = even && !cfg.no_text;
    losses::LossWeights w = EffectiveWeights(cfg);

    Tape<S> t;
    std::mt19937_64 drop =
        MakeRng(cfg.seed, kStreamDropout, static_cast<uint64_t>(sess.iter));
    model::RunFlags<S> run{true, &drop};
    auto mel_nodes = model::MelStepNodes(t, batch);

    Node<S> *ht = nullptr;
    if (!cfg.no_text)
      ht = m.et.Forward(t, batch.phonemes, batch.phon_lens, run);
    auto rec = m.er.TeacherForward(t, mel_nodes, batch.mel_lens,
                                   batch.phonemes, batch.phon_lens);

    Node<S> *h_s = nullptr;
    Node<S> *se = nullptr;
    if (sess.finetune) {
      Node<S> *table = L2NormalizeRows(t, t.Param(*sess.ft_embed));
      h_s = SelectRows(t, table, batch.speakers);
    } else {
      auto spk = m.es.Forward(t, mel_nodes, batch.mel_lens);
      h_s = Detach(t, spk.normalized);
      se = losses::SpeakerEmbeddingLoss(t, spk.logits, batch.speakers);
    }

    Node<S> *h_in = text_path ? ht : rec.hr_seg;
    auto dec = m.da.TeacherForward(t, h_in, batch.phon_lens, h_s,
                                   batch.mel_steps, batch.mel_lens, run);

    Node<S> *tc = losses::PhonemeClassificationLoss(t, rec.logits_seg,
                                                    batch.phonemes,
                                                    batch.phon_lens);
    Node<S> *ct = nullptr;
    if (!cfg.no_text)
      ct = losses::ContrastiveLoss(t, rec.hr_seg, ht, batch.phon_lens,
                                   m.cfg.ct_mean);
    Node<S> *adv = nullptr, *sc = nullptr;
    if (!cfg.no_adv) {
      Node<S> *logits = m.cs.Forward(t, rec.hr_seg, run);
      if (m.cs.binary()) {
        sc = losses::SpeakerClassifierLossBinary(t, logits, batch.speakers,
                                                 batch.phon_lens);
        adv = losses::AdversarialLossBinary(t, logits);
      } else {
        sc = losses::SpeakerClassifierLoss(t, logits, batch.speakers,
                                           batch.phon_lens);
        adv = losses::AdversarialLoss(t, logits);
      }
    }
    Mat<S> target =
        losses::MelTargetSeg(batch.mel_steps, batch.mel_lens, dec.out_lens);
    Node<S> *rc = losses::ReconstructionLoss(t, dec.post_seg, target,
                                             dec.out_lens, batch.mel_lens);
    if (m.cfg.dual_rc)
      rc = Add(t, rc, losses::ReconstructionLoss(t, dec.pre_seg, target,
                                                 dec.out_lens,
                                                 batch.mel_lens));
    Node<S> *ed = losses::StopLoss(t, dec.stop_steps, dec.step_counts);

    StepRecord out;
    out.iter = sess.iter;
    out.even = even;
    out.text_path = text_path;
    out.lr = lr;
    losses::LossReport &rep = out.report;
    rep.l_tc = tc->val(0, 0);
    rep.l_ct = ct != nullptr ? ct->val(0, 0) : 0.0;
    rep.l_adv = adv != nullptr ? adv->val(0, 0) : 0.0;
    rep.l_sc = sc != nullptr ? sc->val(0, 0) : 0.0;
    rep.l_se = se != nullptr ? se->val(0, 0) : 0.0;
    rep.l_rc = rc->val(0, 0);
    rep.l_ed = ed->val(0, 0);
    const double vals[] = {rep.l_tc, rep.l_ct, rep.l_adv, rep.l_sc,
                           rep.l_se, rep.l_rc, rep.l_ed};
    for (double v : vals)
      VC_CHECK(std::isfinite(v), "non-finite loss at " + batch_tag);
    losses::Assemble(&rep, w, text_path);

    // Gradient harvests.  Tensor and node gradients are cleared between
    // passes so each group's stash holds exactly its routed terms.
    auto stores = sess.AllStores();
    auto zero_all = [&] {
      for (auto *st : stores) st->ZeroGrads();
      t.ZeroGrads();
    };
    for (auto &g : sess.groups) g.ClearStash();
    zero_all();
    if (sc != nullptr) {
      t.Backward(Scale(t, sc, static_cast<S>(w.w_sc)));
      sess.Find("cs")->StashGrads();
      zero_all();
    }
    if (se != nullptr) {
      t.Backward(se);
      sess.Find("es")->StashGrads();
      zero_all();
    }
    std::vector<Node<S> *> terms = {tc, rc, ed};
    std::vector<S> coeff = {S(1), S(1), S(1)};
    if (ct != nullptr) {
      terms.push_back(ct);
      coeff.push_back(static_cast<S>(w.w_ct));
    }
    if (adv != nullptr) {
      terms.push_back(adv);
      coeff.push_back(static_cast<S>(w.w_adv));
    }
    t.Backward(LinearCombine(t, terms, coeff));
    for (const char *n : {"et", "er", "da", "ft"})
      if (Group<S> *g = sess.Find(n)) g->StashGrads();
    zero_all();

    for (auto &g : sess.groups) {
      g.RestoreGrads();
      g.grad_norm = cfg.clip_norm > 0
                        ? ClipGradNorm(g.params, cfg.clip_norm)
                        : ClipGradNorm(g.params, 1e300);
      g.adam.Step(lr);
    }
    for (auto *st : stores) st->ZeroGrads();

    auto norm_of = [&](const char *n) {
      Group<S> *g = sess.Find(n);
      return g != nullptr ? g->grad_norm : 0.0;
    };
    out.gnorm_et = norm_of("et");
    out.gnorm_er = norm_of("er");
    out.gnorm_es = norm_of("es");
    out.gnorm_cs = norm_of("cs");
    out.gnorm_da = norm_of("da");
    out.gnorm_ft = norm_of("ft");
    ++sess.iter;
    return out;
  } catch (const Error &e) {
    VC_ERROR(batch_tag << ": " << e.what());
  }
}

// Greedy-decode PER over a subset of the corpus.
template <typename S>
double ValidationPer(const model::Model<S> &m, const corpus::Corpus &data,
                     const std::vector<int> &indices, int beam_width) {
  std::vector<std::vector<int>> hyps, refs;
  int eos = data.EosId();
  for (int i : indices) {
    const corpus::Utterance &u = data.utts[i];
    Mat<S> mel = u.mel.template cast<S>();
    auto hyp = m.er.BeamDecode(mel, beam_width);
    hyps.push_back(eval::StripEos(hyp.phonemes, eos));
    refs.push_back(eval::StripEos(u.phonemes, eos));
  }
  return eval::PhonemeErrorRate(hyps, refs);
}

// ---------------------------------------------------------------------------
// Checkpoint and optimizer-state files

inline std::string EpochCkptPath(const std::string &dir, int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04d.ckpt", epoch);
  return dir + "/" + buf;
}
inline std::string EpochStatePath(const std::string &dir, int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04d.trn", epoch);
  return dir + "/" + buf;
}

template <typename S>
void SaveTrainState(const std::string &path, const TrainSession<S> &sess,
                    int next_epoch) {
  std::ofstream os(path, std::ios::binary);
  VC_CHECK(os.good(), "cannot open " + path + " for writing");
  WriteString(os, "VTRN");
  WriteU32(os, 1);
  WriteU64(os, static_cast<uint64_t>(sess.iter));
  WriteU32(os, static_cast<uint32_t>(next_epoch));
  WriteU32(os, static_cast<uint32_t>(sess.groups.size()));
  for (const auto &g : sess.groups) {
    WriteString(os, g.name);
    g.adam.SaveState(os);
  }
  VC_CHECK(os.good(), "write failed for " + path);
}

template <typename S>
int LoadTrainState(const std::string &path, TrainSession<S> *sess) {
  std::ifstream is(path, std::ios::binary);
  VC_CHECK(is.good(), "cannot open " + path);
  VC_CHECK(ReadString(is) == "VTRN", "bad training-state magic in " + path);
  VC_CHECK(ReadU32(is) == 1, "unsupported training-state version");
  sess->iter = static_cast<int64_t>(ReadU64(is));
  int next_epoch = static_cast<int>(ReadU32(is));
  uint32_t n = ReadU32(is);
  VC_CHECK(n == sess->groups.size(), "group count mismatch in " + path);
  for (auto &g : sess->groups) {
    VC_CHECK(ReadString(is) == g.name, "group order mismatch in " + path);
    g.adam.LoadState(is);
  }
  return next_epoch;
}

// Highest epoch with both a checkpoint and a state file, or -1.
inline int LatestEpoch(const std::string &dir) {
  namespace fs = std::filesystem;
  int best = -1;
  if (!fs::is_directory(dir)) return best;
  for (const auto &e : fs::directory_iterator(dir)) {
    std::string name = e.path().filename().string();
    int epoch = -1;
    if (std::sscanf(name.c_str(), "epoch_%d.ckpt", &epoch) == 1 &&
        fs::exists(EpochStatePath(dir, epoch)))
      best = std::max(best, epoch);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Epoch loop shared by pre-training and fine-tuning

class TrainLog {
 public:
  TrainLog(const std::string &path, bool append) {
    if (path.empty()) return;
    os_.open(path, append ? std::ios::app : std::ios::trunc);
    VC_CHECK(os_.good(), "cannot open training log " + path);
  }
  void Line(const nlohmann::json &j) {
    if (!os_.is_open()) return;
    os_ << j.dump() << "\n";
    os_.flush();
  }

 private:
  std::ofstream os_;
};

inline nlohmann::json StepJson(const StepRecord &r) {
  const losses::LossReport &p = r.report;
  return {{"step", r.iter},
          {"epoch", r.epoch},
          {"parity", r.even ? "even" : "odd"},
          {"path", r.text_path ? "text" : "audio"},
          {"lr", r.lr},
          {"l_tc", p.l_tc},
          {"l_ct", p.l_ct},
          {"l_adv", p.l_adv},
          {"l_sc", p.l_sc},
          {"l_se", p.l_se},
          {"l_rc", p.l_rc},
          {"l_ed", p.l_ed},
          {"total_et", p.total_et},
          {"total_er", p.total_er},
          {"total_es", p.total_es},
          {"total_cs", p.total_cs},
          {"total_da", p.total_da}};
}

template <typename S>
void RunEpochs(TrainSession<S> &sess, const corpus::Corpus &data,
               const TrainConfig &cfg, const std::string &out_dir,
               int start_epoch, std::vector<StepRecord> *records,
               std::vector<double> *val_pers) {
  int n = static_cast<int>(data.utts.size());
  VC_CHECK(n > 0, "empty corpus");
  std::vector<int> train_idx, val_idx;
  if (cfg.val_fraction > 0.0) {
    corpus::SplitIndices(n, cfg.val_fraction, cfg.seed, &train_idx, &val_idx);
  } else {
    train_idx.resize(n);
    std::iota(train_idx.begin(), train_idx.end(), 0);
  }
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  TrainLog log(out_dir.empty() ? "" : out_dir + "/train_log.jsonl",
               start_epoch > 0);

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    double lr = LrAt(cfg, epoch);
    auto batches =
        corpus::BatchIndices(train_idx, cfg.batch_size, cfg.seed, epoch);
    for (size_t b = 0; b < batches.size(); ++b) {
      model::Batch<S> batch =
          CastBatch<S>(corpus::MakeBatch(data, batches[b]));
      std::string tag = "epoch " + std::to_string(epoch) + " batch " +
                        std::to_string(b) + " utts";
      for (int i : batches[b]) tag += " " + data.utts[i].utt_id;
      StepRecord r = Step(sess, batch, cfg, lr, tag);
      r.epoch = epoch;
      if (records != nullptr) records->push_back(r);
      log.Line(StepJson(r));
    }
    double vper = -1.0;
    if (!val_idx.empty()) vper = ValidationPer(*sess.m, data, val_idx, 1);
    if (val_pers != nullptr) val_pers->push_back(vper);
    log.Line({{"epoch", epoch}, {"val_per", vper}, {"lr", lr}});
    if (!out_dir.empty()) {
      if (sess.finetune) {
        model::FinetuneBlob<S> blob = sess.Blob();
        model::SaveModel(EpochCkptPath(out_dir, epoch), *sess.m, &blob);
      } else {
        model::SaveModel(EpochCkptPath(out_dir, epoch), *sess.m);
      }
      SaveTrainState(EpochStatePath(out_dir, epoch), sess, epoch + 1);
    }
  }
}

// Algorithm-1 pre-training over all speakers of the corpus.  With resume,
// the latest epoch checkpoint in out_dir is reloaded and training continues
// where it stopped; the curves match an uninterrupted run.
template <typename S>
void Pretrain(model::Model<S> *m, const corpus::Corpus &data,
              const TrainConfig &cfg, const std::string &out_dir,
              bool resume = false, std::vector<StepRecord> *records = nullptr,
              std::vector<double> *val_pers = nullptr) {
  VC_CHECK(data.NumSpeakers() >= 2, "pre-training needs at least 2 speakers");
  int latest = resume ? LatestEpoch(out_dir) : -1;
  if (resume) {
    VC_CHECK(latest >= 0, "no resumable checkpoint under " + out_dir);
    model::LoadModel(EpochCkptPath(out_dir, latest), m);
  }
  TrainSession<S> sess = TrainSession<S>::ForPretrain(m);
  int start_epoch =
      resume ? LoadTrainState(EpochStatePath(out_dir, latest), &sess) : 0;
  RunEpochs(sess, data, cfg, out_dir, start_epoch, records, val_pers);
}

// Mean tanh speaker-encoder output per speaker, L2-normalized: the §III-E
// initialization of the two trainable embedding vectors.
template <typename S>
Mat<S> SpeakerMeanEmbeddings(const model::Model<S> &m,
                             const corpus::Corpus &data) {
  int n_spk = data.NumSpeakers();
  Mat<S> sum = Mat<S>::Zero(n_spk, m.cfg.se_out);
  std::vector<int> count(n_spk, 0);
  for (const corpus::Utterance &u : data.utts) {
    Tape<S> t(false);
    model::Batch<S> b;
    b.phonemes = {u.phonemes};
    b.phon_lens = {static_cast<int>(u.phonemes.size())};
    b.mel_lens = {static_cast<int>(u.mel.rows())};
    b.speakers = {u.speaker};
    for (int r = 0; r < u.mel.rows(); ++r)
      b.mel_steps.push_back(u.mel.row(r).template cast<S>());
    auto mel_nodes = model::MelStepNodes(t, b);
    auto spk = m.es.Forward(t, mel_nodes, b.mel_lens);
    sum.row(u.speaker) += spk.embedding->val.row(0);
    ++count[u.speaker];
  }
  for (int v = 0; v < n_spk; ++v) {
    VC_CHECK(count[v] > 0,
             "speaker " + data.speakers[v] + " has no utterances");
    sum.row(v) /= static_cast<S>(count[v]);
    S norm = sum.row(v).norm();
    VC_CHECK(norm > S(0), "degenerate mean speaker embedding");
    sum.row(v) /= norm;
  }
  return sum;
}

// §III-E initialization: per-speaker mean embeddings and a fresh sigmoid
// classifier head.  E^s is dropped from the trainable state afterwards.
template <typename S>
model::FinetuneBlob<S> InitFinetune(model::Model<S> *m,
                                    const corpus::Corpus &pair,
                                    uint64_t seed) {
  VC_CHECK(pair.NumSpeakers() == 2, "fine-tuning expects exactly 2 speakers");
  VC_CHECK(!m->cs.binary(), "classifier head is already binary");
  model::FinetuneBlob<S> blob;
  blob.speakers = pair.speakers;
  blob.embed = SpeakerMeanEmbeddings(*m, pair);
  std::mt19937_64 rng = MakeRng(seed, kStreamInit, 1);
  m->cs.ResetBinaryHead(&rng);
  return blob;
}

// §III-E fine-tuning on a two-speaker corpus.  The blob's embedding table
// becomes a trainable parameter group updated by the decoder-path losses.
template <typename S>
void Finetune(model::Model<S> *m, const model::FinetuneBlob<S> &blob,
              const corpus::Corpus &pair, const TrainConfig &cfg,
              const std::string &out_dir, bool resume = false,
              std::vector<StepRecord> *records = nullptr,
              std::vector<double> *val_pers = nullptr) {
  VC_CHECK(pair.NumSpeakers() == 2, "fine-tuning expects exactly 2 speakers");
  model::FinetuneBlob<S> active = blob;
  int latest = resume ? LatestEpoch(out_dir) : -1;
  if (resume) {
    VC_CHECK(latest >= 0, "no resumable checkpoint under " + out_dir);
    model::LoadModel(EpochCkptPath(out_dir, latest), m, &active);
    VC_CHECK(active.embed.size() > 0, "checkpoint lacks the embedding table");
  }
  TrainSession<S> sess = TrainSession<S>::ForFinetune(m, active);
  int start_epoch =
      resume ? LoadTrainState(EpochStatePath(out_dir, latest), &sess) : 0;
  RunEpochs(sess, pair, cfg, out_dir, start_epoch, records, val_pers);
}

}  // namespace train
}  // namespace vc

#endif  // VC_TRAIN_TRAIN_H_
