// src/corpus/dsp.cc

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

#include "vc/corpus/dsp.h"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>

namespace vc {
namespace dsp {

namespace {

constexpr double kPi = 3.14159265358979323846;

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Periodic Hann window.
std::vector<double> Hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
  return w;
}

// Reflection padding of half a window on both ends so frame m is centered on
// sample m * hop.
std::vector<double> PadReflect(const std::vector<float> &wav, int pad) {
  int n = static_cast<int>(wav.size());
  VC_CHECK(n > 1, "waveform too short to pad");
  std::vector<double> out(n + 2 * pad);
  auto at = [&](int i) {
    if (i < 0) i = -i;
    int period = 2 * (n - 1);
    i %= period;
    if (i >= n) i = period - i;
    return static_cast<double>(wav[i]);
  };
  for (int i = 0; i < n + 2 * pad; ++i) out[i] = at(i - pad);
  return out;
}

}  // namespace

void Fft(std::vector<std::complex<double>> *xp, bool inverse) {
  std::vector<std::complex<double>> &x = *xp;
  int n = static_cast<int>(x.size());
  VC_CHECK(n > 0 && (n & (n - 1)) == 0, "FFT size must be a power of two");
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * kPi / len * (inverse ? 1.0 : -1.0);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (int k = 0; k < len / 2; ++k) {
        std::complex<double> u = x[i + k];
        std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto &v : x) v /= n;
}

Matd MelFilterbank(const AudioConfig &cfg) {
  int bins = cfg.nfft / 2 + 1;
  Matd fb = Matd::Zero(bins, cfg.n_mels);
  double mel_lo = HzToMel(cfg.fmin);
  double mel_hi = HzToMel(cfg.fmax);
  std::vector<double> edges(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));
  for (int k = 0; k < bins; ++k) {
    double f = static_cast<double>(k) * cfg.sample_rate / cfg.nfft;
    for (int m = 0; m < cfg.n_mels; ++m) {
      double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
      if (f > lo && f < mid)
        fb(k, m) = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        fb(k, m) = (hi - f) / (hi - mid);
    }
  }
  return fb;
}

Matd Stft(const std::vector<float> &wav, const AudioConfig &cfg) {
  VC_CHECK(!wav.empty(), "empty waveform");
  VC_CHECK(static_cast<int>(wav.size()) >= cfg.win,
           "waveform shorter than one analysis window");
  VC_CHECK(cfg.nfft >= cfg.win, "nfft must cover the window");
  std::vector<double> padded = PadReflect(wav, cfg.win / 2);
  std::vector<double> window = Hann(cfg.win);
  int frames = static_cast<int>(wav.size()) / cfg.hop + 1;
  int bins = cfg.nfft / 2 + 1;
  Matd mag(frames, bins);
  std::vector<std::complex<double>> buf(cfg.nfft);
  for (int m = 0; m < frames; ++m) {
    int start = m * cfg.hop;
    for (int i = 0; i < cfg.nfft; ++i)
      buf[i] = i < cfg.win ? padded[start + i] * window[i] : 0.0;
    Fft(&buf, false);
    for (int k = 0; k < bins; ++k) mag(m, k) = std::abs(buf[k]);
  }
  return mag;
}

Matf ExtractMel(const std::vector<float> &wav, const AudioConfig &cfg) {
  Matd mag = Stft(wav, cfg);
  Matd mel = mag * MelFilterbank(cfg);
  Matf out(mel.rows(), mel.cols());
  for (int i = 0; i < mel.rows(); ++i)
    for (int j = 0; j < mel.cols(); ++j)
      out(i, j) =
          static_cast<float>(std::log(std::max(mel(i, j), cfg.mel_floor)));
  return out;
}

std::pair<int, int> TrimSilence(const std::vector<float> &wav,
                                const AudioConfig &cfg) {
  int n = static_cast<int>(wav.size());
  int frames = std::max(1, (n - cfg.win) / cfg.hop + 1);
  std::vector<double> energy(frames, 0.0);
  double peak = 0.0;
  for (int m = 0; m < frames; ++m) {
    double e = 0.0;
    for (int i = 0; i < cfg.win && m * cfg.hop + i < n; ++i) {
      double s = wav[m * cfg.hop + i];
      e += s * s;
    }
    energy[m] = e;
    peak = std::max(peak, e);
  }
  if (peak <= 0.0) return {0, n};
  double thresh = peak * std::pow(10.0, -cfg.trim_db / 10.0);
  int first = 0, last = frames - 1;
  while (first < frames && energy[first] < thresh) ++first;
  while (last > first && energy[last] < thresh) --last;
  int begin = first * cfg.hop;
  int end = std::min(n, last * cfg.hop + cfg.win);
  if (begin >= end) return {0, n};
  return {begin, end};
}

std::vector<float> GriffinLim(const Matf &logmel, const AudioConfig &cfg) {
  VC_CHECK(logmel.cols() == cfg.n_mels, "mel bin count mismatch");
  int frames = static_cast<int>(logmel.rows());
  VC_CHECK(frames >= 1, "empty mel input");
  Matd fb = MelFilterbank(cfg);
  Matd pinv = fb.completeOrthogonalDecomposition().pseudoInverse();
  Matd mel_energy(frames, cfg.n_mels);
  for (int i = 0; i < frames; ++i)
    for (int j = 0; j < cfg.n_mels; ++j)
      mel_energy(i, j) = std::exp(static_cast<double>(logmel(i, j)));
  Matd mag = (mel_energy * pinv).cwiseMax(0.0);

  int bins = cfg.nfft / 2 + 1;
  int out_len = (frames - 1) * cfg.hop + cfg.win;
  std::vector<double> window = Hann(cfg.win);
  Matd phase = Matd::Zero(frames, bins);

  auto istft = [&](const Matd &m, const Matd &ph) {
    std::vector<double> acc(out_len, 0.0), norm(out_len, 0.0);
    std::vector<std::complex<double>> buf(cfg.nfft);
    for (int f = 0; f < frames; ++f) {
      for (int k = 0; k < cfg.nfft; ++k) buf[k] = 0.0;
      for (int k = 0; k < bins; ++k) {
        std::complex<double> v =
            std::polar(m(f, k), ph(f, k));
        buf[k] = v;
        if (k > 0 && k < cfg.nfft - k) buf[cfg.nfft - k] = std::conj(v);
      }
      Fft(&buf, true);
      for (int i = 0; i < cfg.win; ++i) {
        int pos = f * cfg.hop + i;
        acc[pos] += buf[i].real() * window[i];
        norm[pos] += window[i] * window[i];
      }
    }
    for (int i = 0; i < out_len; ++i)
      if (norm[i] > 1e-10) acc[i] /= norm[i];
    return acc;
  };

  std::vector<double> wav;
  for (int it = 0; it < cfg.griffin_lim_iters; ++it) {
    wav = istft(mag, phase);
    // Re-analyze to update the phase estimate.
    std::vector<std::complex<double>> buf(cfg.nfft);
    for (int f = 0; f < frames; ++f) {
      for (int i = 0; i < cfg.nfft; ++i) {
        int pos = f * cfg.hop + i;
        buf[i] = i < cfg.win && pos < out_len ? wav[pos] * window[i] : 0.0;
      }
      Fft(&buf, false);
      for (int k = 0; k < bins; ++k) phase(f, k) = std::arg(buf[k]);
    }
  }
  wav = istft(mag, phase);
  // Drop the half-window margins: analysis frames are centered, so the
  // trimmed result lines up with the original sample grid and the poorly
  // normalized overlap-add edges never reach the caller.
  int keep = std::max(1, (frames - 1) * cfg.hop);
  int off = std::min<int>(cfg.win / 2, static_cast<int>(wav.size()) - keep);
  float peak = 1e-9f;
  for (int i = 0; i < keep; ++i)
    peak = std::max(peak, static_cast<float>(std::abs(wav[off + i])));
  std::vector<float> out(keep);
  float gain = peak > 0.95f ? 0.95f / peak : 1.0f;
  for (int i = 0; i < keep; ++i)
    out[i] = static_cast<float>(wav[off + i]) * gain;
  return out;
}

std::vector<double> TrackF0(const std::vector<float> &wav,
                            const AudioConfig &cfg) {
  int n = static_cast<int>(wav.size());
  int frames = n / cfg.hop + 1;
  std::vector<double> f0(frames, 0.0);
  int lag_min = cfg.sample_rate / 400;
  int lag_max = cfg.sample_rate / 60;
  std::vector<double> padded = PadReflect(wav, cfg.win / 2);
  double global_peak = 0.0;
  std::vector<double> frame_energy(frames, 0.0);
  for (int m = 0; m < frames; ++m) {
    double e = 0.0;
    for (int i = 0; i < cfg.win; ++i) {
      double s = padded[m * cfg.hop + i];
      e += s * s;
    }
    frame_energy[m] = e;
    global_peak = std::max(global_peak, e);
  }
  for (int m = 0; m < frames; ++m) {
    if (frame_energy[m] < global_peak * 1e-4) continue;  // silence
    const double *seg = padded.data() + m * cfg.hop;
    double r0 = frame_energy[m];
    double best = 0.0;
    int best_lag = 0;
    for (int lag = lag_min; lag <= lag_max && lag < cfg.win; ++lag) {
      double r = 0.0;
      for (int i = 0; i + lag < cfg.win; ++i) r += seg[i] * seg[i + lag];
      if (r > best) {
        best = r;
        best_lag = lag;
      }
    }
    if (best_lag > 0 && best / r0 > 0.3)
      f0[m] = static_cast<double>(cfg.sample_rate) / best_lag;
  }
  return f0;
}

}  // namespace dsp
}  // namespace vc
