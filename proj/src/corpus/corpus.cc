// src/corpus/corpus.cc

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

#include "vc/corpus/corpus.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "vc/base/io.h"
#include "vc/base/rng.h"

namespace vc {
namespace corpus {

namespace {

struct RawLine {
  std::string utt_id, speaker, source;
  std::vector<std::string> symbols;
};

std::vector<std::string> SplitOn(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::vector<std::string> SplitWs(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (ss >> item) out.push_back(item);
  return out;
}

}  // namespace

Corpus LoadCorpus(const std::string &manifest_path,
                  const dsp::AudioConfig &cfg) {
  std::ifstream is(manifest_path);
  VC_CHECK(is.good(), "cannot open manifest " + manifest_path);
  std::filesystem::path base =
      std::filesystem::path(manifest_path).parent_path();

  std::vector<RawLine> lines;
  std::set<std::string> seen_ids;
  std::set<std::string> speaker_set, symbol_set;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields = SplitOn(line, '|');
    VC_CHECK(fields.size() == 4, "manifest line " + std::to_string(lineno) +
                                     ": expected 4 |-separated fields");
    RawLine raw;
    raw.utt_id = fields[0];
    raw.speaker = fields[1];
    raw.symbols = SplitWs(fields[2]);
    raw.source = fields[3];
    VC_CHECK(!raw.utt_id.empty(),
             "manifest line " + std::to_string(lineno) + ": empty utt_id");
    VC_CHECK(!raw.speaker.empty(),
             "utterance " + raw.utt_id + ": missing speaker");
    VC_CHECK(!raw.symbols.empty(),
             "utterance " + raw.utt_id + ": empty phoneme string");
    VC_CHECK(seen_ids.insert(raw.utt_id).second,
             "duplicate utt_id " + raw.utt_id);
    speaker_set.insert(raw.speaker);
    for (const auto &sym : raw.symbols) {
      VC_CHECK(sym != "<eos>",
               "utterance " + raw.utt_id + ": <eos> is reserved");
      symbol_set.insert(sym);
    }
    lines.push_back(std::move(raw));
  }
  VC_CHECK(!lines.empty(), "manifest has no utterances");

  Corpus c;
  c.speakers.assign(speaker_set.begin(), speaker_set.end());
  c.inventory.assign(symbol_set.begin(), symbol_set.end());
  c.inventory.push_back("<eos>");
  std::map<std::string, int> spk_of, sym_of;
  for (size_t i = 0; i < c.speakers.size(); ++i) spk_of[c.speakers[i]] = i;
  for (size_t i = 0; i < c.inventory.size(); ++i) sym_of[c.inventory[i]] = i;

  for (const RawLine &raw : lines) {
    Utterance u;
    u.utt_id = raw.utt_id;
    u.speaker = spk_of.at(raw.speaker);
    for (const auto &sym : raw.symbols) u.phonemes.push_back(sym_of.at(sym));
    u.phonemes.push_back(c.EosId());
    size_t colon = raw.source.find(':');
    VC_CHECK(colon != std::string::npos,
             "utterance " + u.utt_id + ": source needs feat: or wav: prefix");
    std::string kind = raw.source.substr(0, colon);
    std::filesystem::path path = base / raw.source.substr(colon + 1);
    VC_CHECK(std::filesystem::exists(path),
             "utterance " + u.utt_id + ": missing file " + path.string());
    if (kind == "feat") {
      u.mel = LoadMat(path.string());
      u.duration_s = static_cast<double>(u.mel.rows()) * cfg.hop /
                     cfg.sample_rate;
    } else if (kind == "wav") {
      int rate = 0;
      std::vector<float> wav = ReadWav(path.string(), &rate);
      VC_CHECK(rate == cfg.sample_rate,
               "utterance " + u.utt_id + ": sample rate mismatch");
      u.mel = dsp::ExtractMel(wav, cfg);
      auto [b, e] = dsp::TrimSilence(wav, cfg);
      u.duration_s = static_cast<double>(e - b) / cfg.sample_rate;
    } else {
      VC_ERROR("utterance " + u.utt_id + ": unknown source kind " + kind);
    }
    VC_CHECK(u.mel.rows() >= 1 && u.mel.cols() == 80,
             "utterance " + u.utt_id + ": bad mel shape");
    VC_CHECK(u.mel.allFinite(),
             "utterance " + u.utt_id + ": non-finite mel values");
    c.utts.push_back(std::move(u));
  }
  return c;
}

std::vector<int> ShuffledIndices(int n, uint64_t seed, int epoch) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng = MakeRng(seed, kStreamShuffle, epoch);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

void SplitIndices(int n, double val_fraction, uint64_t seed,
                  std::vector<int> *train, std::vector<int> *val) {
  std::vector<int> idx = ShuffledIndices(n, seed, 0);
  int n_val = std::max(1, static_cast<int>(n * val_fraction));
  VC_CHECK(n_val < n, "validation split leaves no training data");
  val->assign(idx.begin(), idx.begin() + n_val);
  train->assign(idx.begin() + n_val, idx.end());
  std::sort(train->begin(), train->end());
  std::sort(val->begin(), val->end());
}

model::Batch<Real> MakeBatch(const Corpus &corpus,
                             const std::vector<int> &indices) {
  VC_CHECK(!indices.empty(), "empty batch");
  model::Batch<Real> b;
  int m_max = 0;
  for (int i : indices) {
    const Utterance &u = corpus.utts.at(i);
    b.phonemes.push_back(u.phonemes);
    b.phon_lens.push_back(static_cast<int>(u.phonemes.size()));
    b.mel_lens.push_back(static_cast<int>(u.mel.rows()));
    b.speakers.push_back(u.speaker);
    m_max = std::max(m_max, static_cast<int>(u.mel.rows()));
  }
  int bsz = static_cast<int>(indices.size());
  for (int m = 0; m < m_max; ++m) {
    Matf step = Matf::Zero(bsz, corpus.utts[indices[0]].mel.cols());
    for (int j = 0; j < bsz; ++j) {
      const Matf &mel = corpus.utts[indices[j]].mel;
      if (m < mel.rows()) step.row(j) = mel.row(m);
    }
    b.mel_steps.push_back(std::move(step));
  }
  return b;
}

std::vector<std::vector<int>> BatchIndices(const std::vector<int> &subset,
                                           int batch_size, uint64_t seed,
                                           int epoch) {
  VC_CHECK(!subset.empty(), "empty utterance list");
  VC_CHECK(batch_size >= 1, "batch size must be positive");
  std::vector<int> order = ShuffledIndices(static_cast<int>(subset.size()),
                                           seed, epoch);
  std::vector<std::vector<int>> out;
  for (size_t i = 0; i < order.size(); i += batch_size) {
    std::vector<int> batch;
    for (size_t j = i; j < order.size() && j < i + batch_size; ++j)
      batch.push_back(subset[order[j]]);
    out.push_back(std::move(batch));
  }
  return out;
}

}  // namespace corpus
}  // namespace vc
