// src/corpus/synth.cc

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

#include "vc/corpus/synth.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "vc/base/io.h"
#include "vc/base/rng.h"

namespace vc {
namespace corpus {

namespace {

constexpr double kLogFloor = -11.512925464970229;  // log(1e-5)
constexpr double kBumpHeight = 8.0;
constexpr double kBumpSigma = 3.0;
constexpr int kMels = 80;

const double kScales[] = {1.0, 1.5, 0.85, 1.25, 1.1, 0.9, 1.35, 0.75};
const double kTilts[] = {0.0, 2.0, -2.0, 1.0, -1.0, 2.5, -2.5, 1.5};
const int kShifts[] = {0, 3, -3, 6, -6, 2, -2, 4};

double TemplateCenter(int phone, int n_use) {
  if (n_use <= 1) return 40.0;
  return 6.0 + phone * 62.0 / (n_use - 1);
}

std::string PhoneName(int p) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "p%02d", p);
  return buf;
}

std::string SpeakerName(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%02d", v);
  return buf;
}

// Shared per-utterance text and base durations, independent of speaker.
struct Text {
  std::vector<int> phones;
  std::vector<int> base_frames;
};

std::vector<Text> MakeTexts(const SynthSpec &spec) {
  int n_use = spec.inventory_size - 1;
  std::vector<Text> texts(spec.n_utts);
  for (int i = 0; i < spec.n_utts; ++i) {
    std::mt19937_64 rng = MakeRng(spec.seed, kStreamSynth, i);
    int len = 4 + static_cast<int>(rng() % 5);
    texts[i].phones.resize(len);
    texts[i].base_frames.resize(len);
    for (int j = 0; j < len; ++j) {
      texts[i].phones[j] = static_cast<int>(rng() % n_use);
      texts[i].base_frames[j] = 5 + static_cast<int>(rng() % 5);
    }
  }
  // Guarantee every phoneme appears at least once.
  std::vector<bool> seen(n_use, false);
  for (const Text &t : texts)
    for (int p : t.phones) seen[p] = true;
  for (int p = 0; p < n_use; ++p) {
    if (seen[p]) continue;
    Text &t = texts[p % spec.n_utts];
    t.phones[p / spec.n_utts % t.phones.size()] = p;
  }
  return texts;
}

}  // namespace

double SpeakerDurationScale(int speaker) {
  return kScales[speaker % (sizeof kScales / sizeof kScales[0])];
}
double SpeakerTilt(int speaker) {
  return kTilts[speaker % (sizeof kTilts / sizeof kTilts[0])];
}
int SpeakerBinShift(int speaker) {
  return kShifts[speaker % (sizeof kShifts / sizeof kShifts[0])];
}

Vecd PhonemeTemplate(int phone, int speaker, const SynthSpec &spec) {
  int n_use = spec.inventory_size - 1;
  VC_CHECK(phone >= 0 && phone < n_use, "phone outside usable inventory");
  double center = TemplateCenter(phone, n_use) + SpeakerBinShift(speaker);
  double tilt = SpeakerTilt(speaker);
  Vecd row(kMels);
  for (int j = 0; j < kMels; ++j) {
    double d = j - center;
    row(j) = kLogFloor +
             kBumpHeight * std::exp(-d * d / (2 * kBumpSigma * kBumpSigma)) +
             tilt * (static_cast<double>(j) / (kMels - 1) - 0.5);
  }
  return row;
}

Corpus MakeSyntheticCorpus(const SynthSpec &spec) {
  VC_CHECK(spec.n_speakers >= 2, "need at least two speakers");
  VC_CHECK(spec.inventory_size >= 4, "inventory too small");
  VC_CHECK(spec.inventory_size <= 100, "inventory cap is 100 symbols");
  dsp::AudioConfig audio;
  int n_use = spec.inventory_size - 1;
  std::vector<Text> texts = MakeTexts(spec);

  Corpus c;
  for (int p = 0; p < n_use; ++p) c.inventory.push_back(PhoneName(p));
  c.inventory.push_back("<eos>");
  for (int v = 0; v < spec.n_speakers; ++v)
    c.speakers.push_back(SpeakerName(v));

  for (int v = 0; v < spec.n_speakers; ++v) {
    double scale = SpeakerDurationScale(v);
    for (int i = 0; i < spec.n_utts; ++i) {
      const Text &text = texts[i];
      std::mt19937_64 noise_rng =
          MakeRng(spec.seed, kStreamSynth,
                  1000003ULL * (i + 1) + static_cast<uint64_t>(v));
      Utterance u;
      char buf[32];
      std::snprintf(buf, sizeof buf, "s%02d_u%03d", v, i);
      u.utt_id = buf;
      u.speaker = v;
      u.phonemes = text.phones;
      u.phonemes.push_back(c.EosId());
      int total = 0;
      std::vector<int> frames(text.phones.size());
      for (size_t j = 0; j < text.phones.size(); ++j) {
        frames[j] = std::max(
            3, static_cast<int>(std::lround(text.base_frames[j] * scale)));
        total += frames[j];
      }
      u.mel = Matf(total, kMels);
      int row = 0;
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (size_t j = 0; j < text.phones.size(); ++j) {
        Vecd tmpl = PhonemeTemplate(text.phones[j], v, spec);
        for (int f = 0; f < frames[j]; ++f, ++row)
          for (int b = 0; b < kMels; ++b)
            u.mel(row, b) = static_cast<float>(
                tmpl(b) + spec.noise * gauss(noise_rng));
      }
      u.duration_s = static_cast<double>(total) * audio.hop / audio.sample_rate;
      c.utts.push_back(std::move(u));
    }
  }
  return c;
}

void WriteCorpus(const Corpus &corpus, const std::string &dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "feats");
  std::ofstream manifest(fs::path(dir) / "manifest.txt");
  VC_CHECK(manifest.good(), "cannot write manifest under " + dir);
  for (const Utterance &u : corpus.utts) {
    std::string feat = "feats/" + u.utt_id + ".bin";
    SaveMat((fs::path(dir) / feat).string(), u.mel);
    manifest << u.utt_id << '|' << corpus.speakers[u.speaker] << '|';
    for (size_t j = 0; j + 1 < u.phonemes.size(); ++j) {
      if (j > 0) manifest << ' ';
      manifest << corpus.inventory[u.phonemes[j]];
    }
    manifest << "|feat:" << feat << '\n';
  }
  VC_CHECK(manifest.good(), "manifest write failed");
}

int ClassifyPhonemeSegment(const Vecd &mean_frame, int speaker,
                           const SynthSpec &spec) {
  int n_use = spec.inventory_size - 1;
  int best = -1;
  double best_d = 0.0;
  for (int p = 0; p < n_use; ++p) {
    double d = (mean_frame - PhonemeTemplate(p, speaker, spec)).squaredNorm();
    if (best < 0 || d < best_d) {
      best = p;
      best_d = d;
    }
  }
  return best;
}

int ClassifySpeaker(const Matf &mel, const SynthSpec &spec) {
  int best = -1;
  double best_score = 0.0;
  for (int v = 0; v < spec.n_speakers; ++v) {
    std::vector<Vecd> tmpls;
    for (int p = 0; p < spec.inventory_size - 1; ++p)
      tmpls.push_back(PhonemeTemplate(p, v, spec));
    double score = 0.0;
    for (int m = 0; m < mel.rows(); ++m) {
      Vecd frame = mel.row(m).cast<double>().transpose();
      double dmin = -1.0;
      for (const Vecd &tmpl : tmpls) {
        double d = (frame - tmpl).squaredNorm();
        if (dmin < 0 || d < dmin) dmin = d;
      }
      score += dmin;
    }
    if (best < 0 || score < best_score) {
      best = v;
      best_score = score;
    }
  }
  return best;
}

}  // namespace corpus
}  // namespace vc
