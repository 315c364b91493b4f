// tests/test_train.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "vc/corpus/synth.h"
#include "vc/train/train.h"

using vc::Mat;
using vc::Matf;
using vc::Real;
using vc::ad::Tape;
using vc::ad::Tensor;
using namespace vc::train;

namespace fs = std::filesystem;

namespace {

vc::model::ModelConfig Tiny(int inventory, int n_speakers) {
  vc::model::ModelConfig c = vc::model::ModelConfig::Desk(inventory, n_speakers);
  c.te_conv_ch = 8;
  c.te_blstm = 4;
  c.te_out = 8;
  c.re_blstm = 4;
  c.re_dec = 6;
  c.re_embed = 5;
  c.re_out = 8;
  c.re_attn = 4;
  c.re_loc_kernel = 3;
  c.re_loc_ch = 2;
  c.se_blstm = 4;
  c.se_out = 6;
  c.cs_hidden = 8;
  c.da_enc_blstm = 4;
  c.da_prenet = 6;
  c.da_lstm = 8;
  c.da_postnet_ch = 6;
  c.da_postnet_k = 3;
  c.da_attn = 4;
  c.da_loc_kernel = 3;
  c.da_loc_ch = 2;
  return c;
}

const vc::corpus::Corpus &Toy() {
  static vc::corpus::Corpus toy = [] {
    vc::corpus::SynthSpec sp;
    sp.n_speakers = 2;
    sp.n_utts = 5;
    sp.inventory_size = 6;
    sp.seed = 11;
    return vc::corpus::MakeSyntheticCorpus(sp);
  }();
  return toy;
}

template <typename S>
std::vector<Mat<S>> Snapshot(const std::vector<Tensor<S> *> &params) {
  std::vector<Mat<S>> out;
  for (const Tensor<S> *p : params) out.push_back(p->value);
  return out;
}

template <typename S>
double MaxDiff(const std::vector<Tensor<S> *> &params,
               const std::vector<Mat<S>> &snap) {
  double worst = 0.0;
  for (size_t i = 0; i < params.size(); ++i)
    worst = std::max<double>(
        worst, (params[i]->value - snap[i]).cwiseAbs().maxCoeff());
  return worst;
}

template <typename S>
double MaxParamDiff(vc::model::Model<S> &a, vc::model::Model<S> &b) {
  auto sa = a.Stores(), sb = b.Stores();
  double worst = 0.0;
  for (size_t i = 0; i < sa.size(); ++i) {
    auto ta = sa[i]->Trainable(), tb = sb[i]->Trainable();
    REQUIRE(ta.size() == tb.size());
    for (size_t j = 0; j < ta.size(); ++j)
      worst = std::max<double>(
          worst, (ta[j]->value - tb[j]->value).cwiseAbs().maxCoeff());
  }
  return worst;
}

double GradAbsMax(const std::vector<Tensor<double> *> &params) {
  double worst = 0.0;
  for (const Tensor<double> *p : params)
    worst = std::max(worst, p->grad.cwiseAbs().maxCoeff());
  return worst;
}

void ExpectSameRecord(const StepRecord &a, const StepRecord &b) {
  CHECK(a.iter == b.iter);
  CHECK(a.even == b.even);
  CHECK(a.text_path == b.text_path);
  CHECK(a.lr == b.lr);
  CHECK(a.report.l_tc == b.report.l_tc);
  CHECK(a.report.l_ct == b.report.l_ct);
  CHECK(a.report.l_adv == b.report.l_adv);
  CHECK(a.report.l_sc == b.report.l_sc);
  CHECK(a.report.l_se == b.report.l_se);
  CHECK(a.report.l_rc == b.report.l_rc);
  CHECK(a.report.l_ed == b.report.l_ed);
  CHECK(a.gnorm_et == b.gnorm_et);
  CHECK(a.gnorm_er == b.gnorm_er);
  CHECK(a.gnorm_es == b.gnorm_es);
  CHECK(a.gnorm_cs == b.gnorm_cs);
  CHECK(a.gnorm_da == b.gnorm_da);
  CHECK(a.gnorm_ft == b.gnorm_ft);
}

fs::path FreshDir(const std::string &name) {
  fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("adam matches the constant gradient closed form") {
  vc::nn::ParamStore<double> store;
  Tensor<double> *p = store.Add("w", 2, 3, vc::nn::Init::kZero, nullptr);
  p->value.setConstant(1.0);
  Adam<double> opt;
  opt.Init({p});
  // With a constant unit gradient the bias-corrected moments are exactly 1,
  // so every step subtracts lr / (1 + eps).
  double step = 0.1 / (1.0 + 1e-8);
  for (int k = 1; k <= 5; ++k) {
    p->grad.setConstant(1.0);
    opt.Step(0.1);
    CHECK(std::abs(p->value(1, 2) - (1.0 - k * step)) < 1e-12);
    CHECK(std::abs(p->value.maxCoeff() - p->value.minCoeff()) == 0.0);
  }

  // A parameter whose gradient never moves keeps its exact value.
  vc::nn::ParamStore<double> store2;
  Tensor<double> *q = store2.Add("w", 1, 1, vc::nn::Init::kZero, nullptr);
  q->value(0, 0) = 0.25;
  Adam<double> opt2;
  opt2.Init({q});
  for (int k = 0; k < 3; ++k) {
    q->grad.setZero();
    opt2.Step(0.1);
  }
  CHECK(q->value(0, 0) == 0.25);
}

TEST_CASE("gradient clipping scales only above the threshold") {
  vc::nn::ParamStore<double> store;
  Tensor<double> *a = store.Add("a", 1, 1, vc::nn::Init::kZero, nullptr);
  Tensor<double> *b = store.Add("b", 1, 1, vc::nn::Init::kZero, nullptr);
  a->grad(0, 0) = 3.0;
  b->grad(0, 0) = 4.0;
  double norm = ClipGradNorm<double>({a, b}, 1.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(a->grad(0, 0) == doctest::Approx(0.6));
  CHECK(b->grad(0, 0) == doctest::Approx(0.8));

  a->grad(0, 0) = 0.3;
  b->grad(0, 0) = 0.4;
  norm = ClipGradNorm<double>({a, b}, 1.0);
  CHECK(norm == doctest::Approx(0.5));
  CHECK(a->grad(0, 0) == 0.3);
  CHECK(b->grad(0, 0) == 0.4);
}

TEST_CASE("the learning rate schedule follows the halving rule") {
  TrainConfig fixed;
  fixed.lr = 1e-3;
  CHECK(LrAt(fixed, 0) == 1e-3);
  CHECK(LrAt(fixed, 79) == 1e-3);

  TrainConfig halving = TrainConfig::Finetune();
  halving.lr = 1e-3;
  CHECK(halving.halve_lr);
  CHECK(halving.halve_every == 7);
  CHECK(LrAt(halving, 0) == doctest::Approx(1e-3));
  CHECK(LrAt(halving, 6) == doctest::Approx(1e-3));
  CHECK(LrAt(halving, 7) == doctest::Approx(5e-4));
  CHECK(LrAt(halving, 13) == doctest::Approx(5e-4));
  CHECK(LrAt(halving, 14) == doctest::Approx(2.5e-4));
  CHECK(LrAt(halving, 15) == doctest::Approx(2.5e-4));
}

TEST_CASE("ablation switches zero the right weights") {
  TrainConfig base;
  CHECK(base.weights.w_ct == 30.0);
  CHECK(base.weights.w_sc == 0.1);
  CHECK(base.weights.w_adv == 20.0);

  TrainConfig no_ct = base;
  no_ct.no_ct = true;
  vc::losses::LossWeights w = EffectiveWeights(no_ct);
  CHECK(w.w_ct == 0.0);
  CHECK(w.w_adv == 20.0);
  CHECK(w.w_sc == 0.1);

  TrainConfig no_text = base;
  no_text.no_text = true;
  CHECK(EffectiveWeights(no_text).w_ct == 0.0);

  TrainConfig no_adv = base;
  no_adv.no_adv = true;
  w = EffectiveWeights(no_adv);
  CHECK(w.w_ct == 30.0);
  CHECK(w.w_adv == 0.0);
  CHECK(w.w_sc == 0.0);

  TrainConfig ft = TrainConfig::Finetune();
  CHECK(ft.batch_size == 8);
  CHECK(ft.epochs == 30);
  CHECK(ft.weights.w_adv == 0.2);
}

TEST_CASE("edit distance and phoneme error rate oracles") {
  using vc::eval::EditDistance;
  using vc::eval::PhonemeErrorRate;
  using vc::eval::StripEos;
  CHECK(EditDistance({}, {}) == 0);
  CHECK(EditDistance({1, 2, 3}, {1, 2, 3}) == 0);
  CHECK(EditDistance({1, 2, 3}, {1, 3}) == 1);
  CHECK(EditDistance({1, 2}, {3, 4}) == 2);
  CHECK(EditDistance({1, 2, 3}, {2, 3, 4}) == 2);
  CHECK(EditDistance({}, {7, 7}) == 2);

  CHECK(StripEos({1, 2, 9}, 9) == std::vector<int>{1, 2});
  CHECK(StripEos({1, 2}, 9) == std::vector<int>{1, 2});
  CHECK(StripEos({9}, 9).empty());

  std::vector<std::vector<int>> hyps = {{1, 2}, {1}};
  std::vector<std::vector<int>> refs = {{1, 2, 3}, {1}};
  CHECK(PhonemeErrorRate(hyps, refs) == doctest::Approx(0.25));
}

TEST_CASE("two identical pretraining runs are bit equal") {
  const vc::corpus::Corpus &toy = Toy();
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 2;
  cfg.val_fraction = 0.1;
  cfg.seed = 5;

  auto run = [&](std::vector<StepRecord> *rec, std::vector<double> *vp) {
    vc::model::Model<Real> m;
    m.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 21);
    Pretrain(&m, toy, cfg, "", false, rec, vp);
    return Snapshot(m.et.params().Trainable());
  };
  std::vector<StepRecord> r1, r2;
  std::vector<double> v1, v2;
  auto et1 = run(&r1, &v1);
  auto et2 = run(&r2, &v2);

  REQUIRE(r1.size() == r2.size());
  CHECK(r1.size() == 6);  // 9 train utts, batches of 4, 2 epochs
  for (size_t i = 0; i < r1.size(); ++i) ExpectSameRecord(r1[i], r2[i]);
  REQUIRE(v1.size() == 2);
  CHECK(v1 == v2);
  REQUIRE(et1.size() == et2.size());
  for (size_t i = 0; i < et1.size(); ++i)
    CHECK((et1[i] - et2[i]).cwiseAbs().maxCoeff() == 0.0f);

  // The loss report is populated and the embedding-free groups get gradient.
  CHECK(r1[0].report.l_tc > 0.0);
  CHECK(r1[0].report.l_rc > 0.0);
  CHECK(r1[0].gnorm_es > 0.0);
  CHECK(r1[0].gnorm_cs > 0.0);
  CHECK(r1[0].gnorm_ft == 0.0);
}

TEST_CASE("iteration parity alternates the decoder input path") {
  const vc::corpus::Corpus &toy = Toy();
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 2;
  cfg.val_fraction = 0.1;
  cfg.seed = 5;

  vc::model::Model<Real> m;
  m.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 21);
  std::vector<StepRecord> rec;
  Pretrain(&m, toy, cfg, "", false, &rec, nullptr);
  REQUIRE(rec.size() == 6);
  for (size_t i = 0; i < rec.size(); ++i) {
    CHECK(rec[i].iter == static_cast<int64_t>(i));  // parity spans epochs
    CHECK(rec[i].even == (i % 2 == 0));
    CHECK(rec[i].text_path == rec[i].even);
  }

  // Without the text path every step decodes from the recognition encoding
  // and the text encoder is never updated.
  TrainConfig nt = cfg;
  nt.no_text = true;
  nt.epochs = 1;
  vc::model::Model<Real> m2;
  m2.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 21);
  auto et_before = Snapshot(m2.et.params().Trainable());
  std::vector<StepRecord> rec2;
  Pretrain(&m2, toy, nt, "", false, &rec2, nullptr);
  REQUIRE(rec2.size() == 3);
  for (const StepRecord &r : rec2) {
    CHECK_FALSE(r.text_path);
    CHECK(r.report.l_ct == 0.0);
    CHECK(r.gnorm_et == 0.0);
  }
  CHECK(MaxDiff(m2.et.params().Trainable(), et_before) == 0.0);
}

TEST_CASE("disabling the adversary equals zeroing its weights") {
  const vc::corpus::Corpus &toy = Toy();
  TrainConfig off;
  off.batch_size = 4;
  off.epochs = 1;
  off.val_fraction = 0.0;
  off.seed = 5;
  off.no_adv = true;
  TrainConfig zeroed = off;
  zeroed.no_adv = false;
  zeroed.weights.w_adv = 0.0;
  zeroed.weights.w_sc = 0.0;

  vc::model::Model<Real> ma, mb;
  ma.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 21);
  mb.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 21);
  std::vector<StepRecord> ra, rb;
  Pretrain(&ma, toy, off, "", false, &ra, nullptr);
  Pretrain(&mb, toy, zeroed, "", false, &rb, nullptr);

  REQUIRE(ra.size() == rb.size());
  for (size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].report.l_tc == rb[i].report.l_tc);
    CHECK(ra[i].report.l_ct == rb[i].report.l_ct);
    CHECK(ra[i].report.l_se == rb[i].report.l_se);
    CHECK(ra[i].report.l_rc == rb[i].report.l_rc);
    CHECK(ra[i].report.l_ed == rb[i].report.l_ed);
    CHECK(ra[i].report.l_adv == 0.0);  // never computed
    CHECK(rb[i].report.l_adv > 0.0);   // computed, weighted by zero
  }
  CHECK(MaxParamDiff(ma, mb) <= 1e-6);
}

TEST_CASE("zero classifier weight freezes the classifier") {
  const vc::corpus::Corpus &toy = Toy();
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.val_fraction = 0.0;
  cfg.seed = 5;
  cfg.weights.w_sc = 0.0;  // adversarial term stays on

  vc::model::Model<Real> m;
  m.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 21);
  auto cs_before = Snapshot(m.cs.params().Trainable());
  auto er_before = Snapshot(m.er.params().Trainable());
  Pretrain(&m, toy, cfg, "", false, nullptr, nullptr);
  CHECK(MaxDiff(m.cs.params().Trainable(), cs_before) == 0.0);
  CHECK(MaxDiff(m.er.params().Trainable(), er_before) > 0.0);
}

TEST_CASE("gradient routing respects the detached paths") {
  const vc::corpus::Corpus &toy = Toy();
  vc::model::Model<double> m;
  m.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 3);
  vc::model::Batch<double> batch =
      CastBatch<double>(vc::corpus::MakeBatch(toy, {0, 5}));
  vc::model::RunFlags<double> run;  // eval mode, no dropout

  auto zero = [&](Tape<double> &t) {
    for (auto *st : m.Stores()) st->ZeroGrads();
    t.ZeroGrads();
  };
  auto et_p = m.et.params().Trainable();
  auto er_p = m.er.params().Trainable();
  auto es_p = m.es.params().Trainable();
  auto cs_p = m.cs.params().Trainable();
  auto da_p = m.da.params().Trainable();

  // Text-path step: the decoder reads H^t, so the reconstruction and stop
  // losses reach E^t and D^a but neither E^r nor the detached E^s.
  {
    Tape<double> t;
    auto mel = vc::model::MelStepNodes(t, batch);
    auto ht = m.et.Forward(t, batch.phonemes, batch.phon_lens, run);
    auto rec = m.er.TeacherForward(t, mel, batch.mel_lens, batch.phonemes,
                                   batch.phon_lens);
    auto spk = m.es.Forward(t, mel, batch.mel_lens);
    auto hs = Detach(t, spk.normalized);
    auto se = vc::losses::SpeakerEmbeddingLoss(t, spk.logits, batch.speakers);
    auto dec = m.da.TeacherForward(t, ht, batch.phon_lens, hs,
                                   batch.mel_steps, batch.mel_lens, run);
    Mat<double> target = vc::losses::MelTargetSeg(batch.mel_steps,
                                                  batch.mel_lens, dec.out_lens);
    auto rc = vc::losses::ReconstructionLoss(t, dec.post_seg, target,
                                             dec.out_lens, batch.mel_lens);
    auto ed = vc::losses::StopLoss(t, dec.stop_steps, dec.step_counts);
    auto logits = m.cs.Forward(t, rec.hr_seg, run);
    auto sc = vc::losses::SpeakerClassifierLoss(t, logits, batch.speakers,
                                                batch.phon_lens);

    zero(t);
    t.Backward(vc::ad::LinearCombine(t, {rc, ed}, {1.0, 1.0}));
    CHECK(GradAbsMax(et_p) > 0.0);
    CHECK(GradAbsMax(da_p) > 0.0);
    CHECK(GradAbsMax(er_p) == 0.0);
    CHECK(GradAbsMax(es_p) == 0.0);

    zero(t);
    t.Backward(se);
    CHECK(GradAbsMax(es_p) > 0.0);
    CHECK(GradAbsMax(et_p) == 0.0);
    CHECK(GradAbsMax(er_p) == 0.0);
    CHECK(GradAbsMax(cs_p) == 0.0);
    CHECK(GradAbsMax(da_p) == 0.0);

    zero(t);
    t.Backward(sc);
    CHECK(GradAbsMax(cs_p) > 0.0);
    CHECK(GradAbsMax(es_p) == 0.0);
    zero(t);
  }

  // Audio-path step: the decoder reads H^r, so the same losses now reach E^r
  // and leave E^t untouched.
  {
    Tape<double> t;
    auto mel = vc::model::MelStepNodes(t, batch);
    auto ht = m.et.Forward(t, batch.phonemes, batch.phon_lens, run);
    (void)ht;
    auto rec = m.er.TeacherForward(t, mel, batch.mel_lens, batch.phonemes,
                                   batch.phon_lens);
    auto spk = m.es.Forward(t, mel, batch.mel_lens);
    auto hs = Detach(t, spk.normalized);
    auto dec = m.da.TeacherForward(t, rec.hr_seg, batch.phon_lens, hs,
                                   batch.mel_steps, batch.mel_lens, run);
    Mat<double> target = vc::losses::MelTargetSeg(batch.mel_steps,
                                                  batch.mel_lens, dec.out_lens);
    auto rc = vc::losses::ReconstructionLoss(t, dec.post_seg, target,
                                             dec.out_lens, batch.mel_lens);
    auto ed = vc::losses::StopLoss(t, dec.stop_steps, dec.step_counts);

    zero(t);
    t.Backward(vc::ad::LinearCombine(t, {rc, ed}, {1.0, 1.0}));
    CHECK(GradAbsMax(er_p) > 0.0);
    CHECK(GradAbsMax(da_p) > 0.0);
    CHECK(GradAbsMax(et_p) == 0.0);
    CHECK(GradAbsMax(es_p) == 0.0);
    zero(t);
  }
}

TEST_CASE("finetune initialization and embedding training") {
  // Two speakers with identical audio must receive identical embeddings.
  vc::corpus::Corpus same;
  same.speakers = {"x", "y"};
  same.inventory = {"a", "b", "<eos>"};
  Matf mel(12, 80);
  for (int r = 0; r < 12; ++r)
    for (int c = 0; c < 80; ++c)
      mel(r, c) = -4.0f + std::sin(0.1f * static_cast<float>(r * 80 + c));
  for (int v = 0; v < 2; ++v) {
    vc::corpus::Utterance u;
    u.utt_id = "u" + std::to_string(v);
    u.speaker = v;
    u.phonemes = {0, 1, 2};
    u.mel = mel;
    u.duration_s = 0.15;
    same.utts.push_back(u);
  }
  vc::model::Model<Real> m;
  m.Build(Tiny(3, 2), 9);
  auto blob = InitFinetune(&m, same, 13);
  REQUIRE(blob.embed.rows() == 2);
  CHECK(blob.speakers == std::vector<std::string>{"x", "y"});
  CHECK(std::abs(blob.embed.row(0).norm() - 1.0f) < 1e-5f);
  CHECK(std::abs(blob.embed.row(1).norm() - 1.0f) < 1e-5f);
  CHECK((blob.embed.row(0) - blob.embed.row(1)).cwiseAbs().maxCoeff() < 1e-6f);
  CHECK(m.cs.binary());
  CHECK_THROWS_AS(InitFinetune(&m, same, 13), vc::Error);

  // A fine-tuning session drops E^s, trains the embedding table, and reports
  // no speaker-embedding loss.
  const vc::corpus::Corpus &toy = Toy();
  vc::model::Model<Real> m2;
  m2.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 21);
  auto blob2 = InitFinetune(&m2, toy, 13);
  auto sess = TrainSession<Real>::ForFinetune(&m2, blob2);
  REQUIRE(sess.groups.size() == 5);
  CHECK(sess.groups[0].name == "et");
  CHECK(sess.groups[1].name == "er");
  CHECK(sess.groups[2].name == "cs");
  CHECK(sess.groups[3].name == "da");
  CHECK(sess.groups[4].name == "ft");

  TrainConfig cfg = TrainConfig::Finetune();
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.val_fraction = 0.0;
  cfg.seed = 5;
  fs::path dir = FreshDir("vc_test_ft");
  auto es_before = Snapshot(m2.es.params().Trainable());
  std::vector<StepRecord> rec;
  Finetune(&m2, blob2, toy, cfg, dir.string(), false, &rec, nullptr);
  REQUIRE(rec.size() == 3);
  bool ft_moved = false;
  for (const StepRecord &r : rec) {
    CHECK(r.report.l_se == 0.0);
    CHECK(r.gnorm_es == 0.0);
    if (r.gnorm_ft > 0.0) ft_moved = true;
  }
  CHECK(ft_moved);
  CHECK(MaxDiff(m2.es.params().Trainable(), es_before) == 0.0);

  // The saved checkpoint carries the updated table.
  vc::model::Model<Real> m3;
  vc::model::FinetuneBlob<Real> loaded;
  vc::model::LoadModel(EpochCkptPath(dir.string(), 0), &m3, &loaded);
  REQUIRE(loaded.embed.rows() == 2);
  CHECK(loaded.speakers == toy.speakers);
  CHECK((loaded.embed - blob2.embed).cwiseAbs().maxCoeff() > 0.0f);
  CHECK(m3.cs.binary());
  fs::remove_all(dir);
}

TEST_CASE("training resumes bit exactly") {
  const vc::corpus::Corpus &toy = Toy();
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 4;
  cfg.val_fraction = 0.1;
  cfg.seed = 5;

  fs::path full = FreshDir("vc_test_resume_full");
  fs::path half = FreshDir("vc_test_resume_half");

  vc::model::Model<Real> ma;
  ma.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 21);
  std::vector<StepRecord> ra;
  std::vector<double> va;
  Pretrain(&ma, toy, cfg, full.string(), false, &ra, &va);
  REQUIRE(ra.size() == 12);
  CHECK(LatestEpoch(full.string()) == 3);

  TrainConfig first = cfg;
  first.epochs = 2;
  vc::model::Model<Real> mb;
  mb.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 21);
  Pretrain(&mb, toy, first, half.string(), false, nullptr, nullptr);
  CHECK(LatestEpoch(half.string()) == 1);

  vc::model::Model<Real> mc;  // rebuilt from the checkpoint on resume
  std::vector<StepRecord> rc;
  std::vector<double> vc_per;
  Pretrain(&mc, toy, cfg, half.string(), true, &rc, &vc_per);
  REQUIRE(rc.size() == 6);
  for (size_t i = 0; i < rc.size(); ++i) ExpectSameRecord(rc[i], ra[i + 6]);
  REQUIRE(vc_per.size() == 2);
  CHECK(vc_per[0] == va[2]);
  CHECK(vc_per[1] == va[3]);
  CHECK(MaxParamDiff(ma, mc) == 0.0);

  // The log keeps both halves: 6 + 2 lines, then 6 + 2 appended.
  std::ifstream log((half / "train_log.jsonl").string());
  int lines = 0;
  std::string line, last;
  while (std::getline(log, line))
    if (!line.empty()) {
      ++lines;
      last = line;
    }
  CHECK(lines == 16);
  nlohmann::json j = nlohmann::json::parse(last);
  CHECK(j.contains("val_per"));
  fs::remove_all(full);
  fs::remove_all(half);
}

TEST_CASE("a corrupt batch aborts with its identity") {
  vc::corpus::Corpus bad;
  bad.speakers = {"s0", "s1"};
  bad.inventory = {"a", "<eos>"};
  for (int v = 0; v < 2; ++v) {
    vc::corpus::Utterance u;
    u.utt_id = v == 0 ? "u_good" : "u_bad";
    u.speaker = v;
    u.phonemes = {0, 1};
    u.mel = Matf::Constant(8, 80, v == 0
                                      ? -2.0f
                                      : std::numeric_limits<float>::quiet_NaN());
    u.duration_s = 0.1;
    bad.utts.push_back(u);
  }
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.epochs = 1;
  cfg.val_fraction = 0.0;
  cfg.seed = 5;
  vc::model::Model<Real> m;
  m.Build(Tiny(2, 2), 21);
  CHECK_THROWS_WITH_AS(Pretrain(&m, bad, cfg, "", false, nullptr, nullptr),
                       doctest::Contains("u_bad"), vc::Error);
}

TEST_CASE("train state round trips") {
  const vc::corpus::Corpus &toy = Toy();
  vc::model::Model<Real> m;
  m.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 21);
  auto sess = TrainSession<Real>::ForPretrain(&m);
  sess.iter = 7;
  fs::path dir = FreshDir("vc_test_state");
  fs::create_directories(dir);
  std::string path = (dir / "s.trn").string();
  SaveTrainState(path, sess, 3);

  vc::model::Model<Real> m2;
  m2.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 21);
  auto sess2 = TrainSession<Real>::ForPretrain(&m2);
  CHECK(LoadTrainState(path, &sess2) == 3);
  CHECK(sess2.iter == 7);
  CHECK(LatestEpoch(dir.string()) == -1);  // state without a checkpoint
  fs::remove_all(dir);
}
