// vc/corpus/dsp.h

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

#ifndef VC_CORPUS_DSP_H_
#define VC_CORPUS_DSP_H_

#include <complex>
#include <utility>
#include <vector>

#include "vc/base/common.h"

namespace vc {
namespace dsp {

// Frame analysis settings; defaults give the 12.5 ms hop / 50 ms window
// setup at 16 kHz.
struct AudioConfig {
  int sample_rate = 16000;
  int hop = 200;
  int win = 800;
  int nfft = 1024;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  double mel_floor = 1e-5;
  double trim_db = 40.0;
  int griffin_lim_iters = 60;
};

// In-place iterative radix-2 FFT; size must be a power of two.
void Fft(std::vector<std::complex<double>> *x, bool inverse);

// Triangular mel filterbank, (nfft/2 + 1) x n_mels.
Matd MelFilterbank(const AudioConfig &cfg);

// Magnitude spectrogram with centered frames (reflection padding of win/2 on
// both ends): M = floor(len / hop) + 1 frames x (nfft/2 + 1) bins.
Matd Stft(const std::vector<float> &wav, const AudioConfig &cfg);

// Natural-log mel spectrogram, floored at mel_floor before the log.
Matf ExtractMel(const std::vector<float> &wav, const AudioConfig &cfg);

// Sample range [begin, end) of the speech region: leading and trailing
// frames more than trim_db below the peak frame energy are dropped.
std::pair<int, int> TrimSilence(const std::vector<float> &wav,
                                const AudioConfig &cfg);

// Waveform synthesis from a log-mel matrix: filterbank pseudo-inverse to
// linear magnitudes, then Griffin-Lim phase recovery.
std::vector<float> GriffinLim(const Matf &logmel, const AudioConfig &cfg);

// Per-frame F0 in Hz by windowed autocorrelation; 0 marks unvoiced frames.
// Search band fixed to 60-400 Hz.
std::vector<double> TrackF0(const std::vector<float> &wav,
                            const AudioConfig &cfg);

}  // namespace dsp
}  // namespace vc

#endif  // VC_CORPUS_DSP_H_
