// tests/test_convert.cc

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
#include <vector>

#include "vc/convert/convert.h"
#include "vc/corpus/dsp.h"
#include "vc/corpus/synth.h"

using vc::Mat;
using vc::Matf;
using vc::Real;
using namespace vc::convert;

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

vc::model::FinetuneBlob<Real> UnitBlob(int se_out) {
  vc::model::FinetuneBlob<Real> blob;
  blob.speakers = Toy().speakers;
  blob.embed = Mat<Real>::Zero(2, se_out);
  blob.embed(0, 0) = 1.0f;
  blob.embed(1, 1) = 1.0f;
  return blob;
}

std::vector<float> Tone(double hz, double seconds, double amp) {
  int n = static_cast<int>(seconds * 16000);
  std::vector<float> wav(n);
  for (int i = 0; i < n; ++i)
    wav[i] = static_cast<float>(amp * std::sin(2.0 * M_PI * hz * i / 16000.0));
  return wav;
}

}  // namespace

TEST_CASE("conversion is deterministic and speaker dependent") {
  const vc::corpus::Corpus &toy = Toy();
  vc::model::Model<Real> m;
  m.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 21);
  auto blob = UnitBlob(m.cfg.se_out);
  Mat<Real> mel = toy.utts[0].mel;

  auto r1 = Convert(m, blob, mel, 0, 10);
  auto r2 = Convert(m, blob, mel, 0, 10);
  CHECK(r1.mel.rows() > 0);
  CHECK(r1.mel.cols() == 80);
  CHECK(r1.mel.allFinite());
  CHECK(r1.phonemes == r2.phonemes);
  CHECK(r1.log_prob == r2.log_prob);
  REQUIRE(r1.mel.rows() == r2.mel.rows());
  CHECK((r1.mel - r2.mel).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(r1.rec_truncated == r2.rec_truncated);
  CHECK(r1.dec_capped == r2.dec_capped);
  CHECK(r1.dec_alignment.rows() > 0);
  CHECK(r1.rec_alignment.rows() ==
        static_cast<Eigen::Index>(r1.phonemes.size()));

  // A different target embedding row changes the output.
  auto rt = Convert(m, blob, mel, 1, 10);
  bool differs = rt.mel.rows() != r1.mel.rows() ||
                 (rt.mel - r1.mel).cwiseAbs().maxCoeff() > 0.0f;
  CHECK(differs);

  // The output length is the decoder's choice, not the input frame count.
  CHECK(r1.mel.rows() % m.cfg.reduction == 0);
}

TEST_CASE("conversion flags the free run cap") {
  const vc::corpus::Corpus &toy = Toy();
  auto cfg = Tiny(toy.InventorySize(), toy.NumSpeakers());
  cfg.stop_threshold = 1.1;  // sigmoid never exceeds 1: decode to the cap
  cfg.free_run_cap_mult = 2;
  vc::model::Model<Real> m;
  m.Build(cfg, 21);
  auto blob = UnitBlob(cfg.se_out);

  auto r = Convert(m, blob, toy.utts[2].mel, 1, 10);
  CHECK(r.dec_capped);
  int n = static_cast<int>(r.phonemes.size());
  CHECK(r.mel.rows() == cfg.reduction * cfg.free_run_cap_mult * n);
}

TEST_CASE("speaker selection is validated") {
  const vc::corpus::Corpus &toy = Toy();
  vc::model::Model<Real> m;
  m.Build(Tiny(toy.InventorySize(), toy.NumSpeakers()), 21);
  auto blob = UnitBlob(m.cfg.se_out);

  CHECK(ResolveSpeaker(blob, toy.speakers[0]) == 0);
  CHECK(ResolveSpeaker(blob, toy.speakers[1]) == 1);
  CHECK_THROWS_AS(ResolveSpeaker(blob, "nobody"), vc::Error);
  CHECK_THROWS_AS(Convert(m, blob, toy.utts[0].mel, 7, 10), vc::Error);
  CHECK_THROWS_AS(Convert(m, blob, Matf(0, 80), 0, 10), vc::Error);

  vc::model::FinetuneBlob<Real> degenerate = blob;
  degenerate.embed.row(0).setZero();
  CHECK_THROWS_AS(Convert(m, degenerate, toy.utts[0].mel, 0, 10), vc::Error);
}

TEST_CASE("griffin lim round trips a tonal mel") {
  vc::dsp::AudioConfig cfg;  // 60 iterations by default
  auto wav = Tone(440.0, 1.0, 0.6);
  Matf mel = vc::dsp::ExtractMel(wav, cfg);
  std::vector<float> rec = vc::dsp::GriffinLim(mel, cfg);
  Matf mel2 = vc::dsp::ExtractMel(rec, cfg);
  REQUIRE(mel2.rows() == mel.rows());
  double mae =
      (mel2.cast<double>() - mel.cast<double>()).cwiseAbs().mean();
  CHECK(mae < 1.0);

  float peak = 0.0f;
  for (float s : rec) peak = std::max(peak, std::abs(s));
  CHECK(peak <= 1.0f);

  // A floor-level mel comes back as near silence.
  Matf floor_mel = Matf::Constant(40, 80, std::log(1e-5f));
  std::vector<float> quiet = vc::dsp::GriffinLim(floor_mel, cfg);
  double rms = 0.0;
  for (float s : quiet) rms += static_cast<double>(s) * s;
  rms = std::sqrt(rms / static_cast<double>(quiet.size()));
  CHECK(rms < 1e-3);
}
