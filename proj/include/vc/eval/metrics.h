// vc/eval/metrics.h

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

#ifndef VC_EVAL_METRICS_H_
#define VC_EVAL_METRICS_H_

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vc/base/common.h"
#include "vc/corpus/dsp.h"

namespace vc {
namespace eval {

// Levenshtein distance with unit insert/delete/substitute costs.
inline int64_t EditDistance(const std::vector<int> &a,
                            const std::vector<int> &b) {
  size_t n = a.size(), m = b.size();
  std::vector<int64_t> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int64_t>(i);
    for (size_t j = 1; j <= m; ++j) {
      int64_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Drops a trailing token equal to `eos`, if present.
inline std::vector<int> StripEos(const std::vector<int> &seq, int eos) {
  std::vector<int> out = seq;
  if (!out.empty() && out.back() == eos) out.pop_back();
  return out;
}

// Corpus-level phoneme error rate: total edits over total reference length.
inline double PhonemeErrorRate(const std::vector<std::vector<int>> &hyps,
                               const std::vector<std::vector<int>> &refs) {
  VC_CHECK(hyps.size() == refs.size(), "PER needs matched hyp/ref lists");
  int64_t edits = 0, total = 0;
  for (size_t i = 0; i < refs.size(); ++i) {
    edits += EditDistance(hyps[i], refs[i]);
    total += static_cast<int64_t>(refs[i].size());
  }
  VC_CHECK(total > 0, "PER over empty references");
  return static_cast<double>(edits) / static_cast<double>(total);
}

// Single-pair phone error rate in percent.
inline double PerPct(const std::vector<int> &hyp, const std::vector<int> &ref) {
  VC_CHECK(!ref.empty(), "PER against an empty reference");
  return 100.0 * static_cast<double>(EditDistance(hyp, ref)) /
         static_cast<double>(ref.size());
}

// Absolute duration difference in seconds.
inline double Ddur(double a_s, double b_s) { return std::abs(a_s - b_s); }

// ---------------------------------------------------------------------------
// DTW alignment and the aligned spectral/prosodic metrics

struct DtwResult {
  std::vector<std::pair<int, int>> path;  // (0,0) ... (A-1,B-1), monotone
  double cost = 0.0;                      // summed frame distances
};

// Minimal-cost monotone alignment of two frame sequences (rows = frames)
// under Euclidean frame distance, step set {(1,0),(0,1),(1,1)}.
DtwResult DtwAlign(const Matd &a, const Matd &b);

// Mean mel-cepstral distortion in dB over an alignment path; the 0th
// (energy) coefficient is excluded.
double Mcd(const Matd &a_mcc, const Matd &b_mcc,
           const std::vector<std::pair<int, int>> &path);

// Per-frame analysis of a waveform: mel-cepstra plus an F0 track.
struct AnalysisTrack {
  Matd mcc;                   // M x mcc_order, row 0th entry = energy term
  std::vector<double> f0_hz;  // 0 marks unvoiced
  std::vector<bool> vuv;      // f0 > 0 exactly where true

  int Frames() const { return static_cast<int>(mcc.rows()); }
};

// Mel-cepstra as the orthonormal DCT-II of the log-mel rows, truncated to
// `order` coefficients (order 40 plus the energy term by default).
Matd MccFromLogMel(const Matd &logmel, int order = 41);

AnalysisTrack AnalyzeWaveform(const std::vector<float> &wav,
                              const dsp::AudioConfig &cfg, int mcc_order = 41);

struct F0Metrics {
  double rmse_hz = 0.0;      // over mutually voiced aligned pairs
  double corr = 0.0;         // Pearson, mutually voiced pairs
  bool corr_defined = false; // false when variance degenerates
  double vuv_pct = 0.0;      // % of aligned pairs with mismatched voicing
};

F0Metrics F0Compare(const AnalysisTrack &a, const AnalysisTrack &b,
                    const std::vector<std::pair<int, int>> &path);

// ---------------------------------------------------------------------------
// Tabular metric reports

struct MetricRow {
  std::string utt_id;
  double mcd_db = 0.0;
  double f0_rmse_hz = 0.0;
  double vuv_pct = 0.0;
  double f0_corr = 0.0;
  bool f0_corr_defined = false;
  double ddur_s = 0.0;
  double per_pct = 0.0;
  bool per_defined = false;
};

// Tab-separated table: header, one row per utterance, and a trailing "mean"
// aggregate (undefined cells print "na").
void WriteMetricTable(const std::string &path,
                      const std::vector<MetricRow> &rows);

// The aggregate row that WriteMetricTable appends.
MetricRow AggregateRows(const std::vector<MetricRow> &rows);

// ---------------------------------------------------------------------------
// 2-D embedding projections and scatter plots

enum class Projection { kPca, kTsne };

// Projects row vectors to 2-D. PCA keeps the top two principal axes with a
// deterministic sign convention; t-SNE runs an exact O(n^2) implementation
// initialized from the PCA solution, so both are deterministic.
Matd ProjectEmbeddings(const Matd &x, Projection method);

struct ScatterPoint {
  double x = 0.0, y = 0.0;
  int label = 0;   // legend entry
  int marker = 0;  // 0 = circle, 1 = cross
};

// Self-contained SVG scatter plot with a legend.
void WriteScatterSvg(const std::string &path,
                     const std::vector<ScatterPoint> &pts,
                     const std::vector<std::string> &label_names,
                     const std::string &title);

struct LineSeries {
  std::string label;
  std::vector<double> ys;
};

// Line chart of equally long series drawn against the sample index; one
// legend entry per series.
void WriteLineSvg(const std::string &path,
                  const std::vector<LineSeries> &series,
                  const std::string &title);

// Grayscale 24-bit BMP of a matrix, row 0 at the top, min-max normalized (a
// constant matrix renders mid-gray); each cell becomes a scale x scale block.
void WriteHeatmapBmp(const std::string &path, const Matd &m, int scale = 4);

}  // namespace eval
}  // namespace vc

#endif  // VC_EVAL_METRICS_H_
