// vc/corpus/corpus.h

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

#ifndef VC_CORPUS_CORPUS_H_
#define VC_CORPUS_CORPUS_H_

#include <string>
#include <vector>

#include "vc/base/common.h"
#include "vc/corpus/dsp.h"
#include "vc/model/model.h"

namespace vc {
namespace corpus {

// One training triplet.  Phoneme ids are EOS-terminated at load time; the
// EOS symbol is the last inventory entry.
struct Utterance {
  std::string utt_id;
  int speaker = -1;
  std::vector<int> phonemes;
  Matf mel;  // M x 80 log-mel
  double duration_s = 0.0;
};

struct Corpus {
  std::vector<Utterance> utts;
  std::vector<std::string> speakers;   // sorted distinct names -> [0, S)
  std::vector<std::string> inventory;  // sorted symbols + trailing <eos>

  int EosId() const { return static_cast<int>(inventory.size()) - 1; }
  int InventorySize() const { return static_cast<int>(inventory.size()); }
  int NumSpeakers() const { return static_cast<int>(speakers.size()); }
};

// Reads a line-delimited manifest: utt_id|speaker|space-separated phonemes|
// source, where source is feat:<path> (binary matrix) or wav:<path> (audio,
// features extracted with cfg).  Paths are relative to the manifest.
Corpus LoadCorpus(const std::string &manifest_path,
                  const dsp::AudioConfig &cfg);

// Deterministic shuffle of [0, n) for an epoch.
std::vector<int> ShuffledIndices(int n, uint64_t seed, int epoch);

// Last ~val_fraction of a seed-shuffled order becomes validation.
void SplitIndices(int n, double val_fraction, uint64_t seed,
                  std::vector<int> *train, std::vector<int> *val);

// Padded time-major batch over the given utterances.
model::Batch<Real> MakeBatch(const Corpus &corpus,
                             const std::vector<int> &indices);

// Seed-shuffled mini-batches over a subset of the corpus.
std::vector<std::vector<int>> BatchIndices(const std::vector<int> &subset,
                                           int batch_size, uint64_t seed,
                                           int epoch);

}  // namespace corpus
}  // namespace vc

#endif  // VC_CORPUS_CORPUS_H_
