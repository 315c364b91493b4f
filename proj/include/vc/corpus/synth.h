// vc/corpus/synth.h

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

#ifndef VC_CORPUS_SYNTH_H_
#define VC_CORPUS_SYNTH_H_

#include <string>
#include <vector>

#include "vc/corpus/corpus.h"

namespace vc {
namespace corpus {

// Synthetic corpus: each phoneme is a Gaussian bump template in log-mel
// space, each speaker applies a fixed spectral tilt, bin shift, and duration
// scale, and texts are shared across speakers by utterance index.
struct SynthSpec {
  int n_speakers = 4;
  int n_utts = 30;         // per speaker
  int inventory_size = 12;  // includes the reserved <eos> symbol
  uint64_t seed = 7;
  double noise = 0.3;
};

// Fixed per-speaker transform tables (cycled by speaker index).
double SpeakerDurationScale(int speaker);
double SpeakerTilt(int speaker);
int SpeakerBinShift(int speaker);

// Noise-free log-mel template row for one phoneme under one speaker's
// transform; phone must be a non-EOS symbol.
Vecd PhonemeTemplate(int phone, int speaker, const SynthSpec &spec);

// Deterministic in the seed; utterance texts are shared across speakers and
// every non-EOS phoneme is guaranteed to appear somewhere.
Corpus MakeSyntheticCorpus(const SynthSpec &spec);

// Writes manifest.txt plus per-utterance feature files under dir, loadable
// with LoadCorpus.
void WriteCorpus(const Corpus &corpus, const std::string &dir);

// Nearest-template phoneme for a segment's mean frame, given the speaker.
int ClassifyPhonemeSegment(const Vecd &mean_frame, int speaker,
                           const SynthSpec &spec);

// Speaker whose template set explains the mel best (summed per-frame
// distance to the nearest template).
int ClassifySpeaker(const Matf &mel, const SynthSpec &spec);

}  // namespace corpus
}  // namespace vc

#endif  // VC_CORPUS_SYNTH_H_
