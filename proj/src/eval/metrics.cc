// src/eval/metrics.cc

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

#include "vc/eval/metrics.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <Eigen/Eigenvalues>

namespace vc {
namespace eval {

DtwResult DtwAlign(const Matd &a, const Matd &b) {
  int ar = static_cast<int>(a.rows()), br = static_cast<int>(b.rows());
  VC_CHECK(ar > 0 && br > 0, "DTW over an empty sequence");
  VC_CHECK(a.cols() == b.cols(), "DTW frame dimensions differ");
  Matd dist(ar, br);
  for (int i = 0; i < ar; ++i)
    for (int j = 0; j < br; ++j)
      dist(i, j) = (a.row(i) - b.row(j)).norm();

  Matd acc(ar, br);
  // 0 = diagonal, 1 = (1,0), 2 = (0,1); ties prefer the diagonal.
  Eigen::MatrixXi from(ar, br);
  acc(0, 0) = dist(0, 0);
  from(0, 0) = -1;
  for (int i = 1; i < ar; ++i) {
    acc(i, 0) = acc(i - 1, 0) + dist(i, 0);
    from(i, 0) = 1;
  }
  for (int j = 1; j < br; ++j) {
    acc(0, j) = acc(0, j - 1) + dist(0, j);
    from(0, j) = 2;
  }
  for (int i = 1; i < ar; ++i) {
    for (int j = 1; j < br; ++j) {
      double best = acc(i - 1, j - 1);
      int arg = 0;
      if (acc(i - 1, j) < best) {
        best = acc(i - 1, j);
        arg = 1;
      }
      if (acc(i, j - 1) < best) {
        best = acc(i, j - 1);
        arg = 2;
      }
      acc(i, j) = best + dist(i, j);
      from(i, j) = arg;
    }
  }

  DtwResult res;
  res.cost = acc(ar - 1, br - 1);
  int i = ar - 1, j = br - 1;
  while (true) {
    res.path.emplace_back(i, j);
    int f = from(i, j);
    if (f < 0) break;
    if (f == 0) {
      --i;
      --j;
    } else if (f == 1) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(res.path.begin(), res.path.end());
  return res;
}

double Mcd(const Matd &a_mcc, const Matd &b_mcc,
           const std::vector<std::pair<int, int>> &path) {
  VC_CHECK(!path.empty(), "MCD over an empty path");
  VC_CHECK(a_mcc.cols() == b_mcc.cols(), "MCC dimensions differ");
  VC_CHECK(a_mcc.cols() >= 2, "MCD needs coefficients beyond energy");
  const double k = 10.0 / std::log(10.0) * std::sqrt(2.0);
  int dims = static_cast<int>(a_mcc.cols());
  double total = 0.0;
  for (const auto &[i, j] : path) {
    VC_CHECK(i >= 0 && i < a_mcc.rows() && j >= 0 && j < b_mcc.rows(),
             "path index out of range");
    double ss = 0.0;
    for (int d = 1; d < dims; ++d) {
      double delta = a_mcc(i, d) - b_mcc(j, d);
      ss += delta * delta;
    }
    total += k * std::sqrt(ss);
  }
  return total / static_cast<double>(path.size());
}

Matd MccFromLogMel(const Matd &logmel, int order) {
  int frames = static_cast<int>(logmel.rows());
  int bins = static_cast<int>(logmel.cols());
  VC_CHECK(frames > 0, "MCC of an empty mel");
  VC_CHECK(order >= 1 && order <= bins, "MCC order out of range");
  // Orthonormal DCT-II basis, truncated.
  Matd basis(bins, order);
  double s0 = std::sqrt(1.0 / bins), sd = std::sqrt(2.0 / bins);
  for (int d = 0; d < order; ++d)
    for (int kk = 0; kk < bins; ++kk)
      basis(kk, d) = (d == 0 ? s0 : sd) *
                     std::cos(M_PI * d * (2 * kk + 1) / (2.0 * bins));
  return logmel * basis;
}

AnalysisTrack AnalyzeWaveform(const std::vector<float> &wav,
                              const dsp::AudioConfig &cfg, int mcc_order) {
  AnalysisTrack tr;
  Matd logmel = dsp::ExtractMel(wav, cfg).cast<double>();
  tr.mcc = MccFromLogMel(logmel, mcc_order);
  tr.f0_hz = dsp::TrackF0(wav, cfg);
  VC_CHECK(static_cast<int>(tr.f0_hz.size()) == tr.Frames(),
           "F0 and mel frame counts disagree");
  tr.vuv.resize(tr.f0_hz.size());
  for (size_t i = 0; i < tr.f0_hz.size(); ++i) tr.vuv[i] = tr.f0_hz[i] > 0.0;
  return tr;
}

F0Metrics F0Compare(const AnalysisTrack &a, const AnalysisTrack &b,
                    const std::vector<std::pair<int, int>> &path) {
  VC_CHECK(!path.empty(), "F0 comparison over an empty path");
  F0Metrics out;
  std::vector<double> fa, fb;
  int mismatched = 0;
  for (const auto &[i, j] : path) {
    bool va = a.vuv[i], vb = b.vuv[j];
    if (va != vb) ++mismatched;
    if (va && vb) {
      fa.push_back(a.f0_hz[i]);
      fb.push_back(b.f0_hz[j]);
    }
  }
  out.vuv_pct = 100.0 * mismatched / static_cast<double>(path.size());
  if (fa.empty()) return out;

  double se = 0.0, ma = 0.0, mb = 0.0;
  for (size_t n = 0; n < fa.size(); ++n) {
    double d = fa[n] - fb[n];
    se += d * d;
    ma += fa[n];
    mb += fb[n];
  }
  out.rmse_hz = std::sqrt(se / static_cast<double>(fa.size()));
  ma /= static_cast<double>(fa.size());
  mb /= static_cast<double>(fa.size());
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t n = 0; n < fa.size(); ++n) {
    cov += (fa[n] - ma) * (fb[n] - mb);
    va += (fa[n] - ma) * (fa[n] - ma);
    vb += (fb[n] - mb) * (fb[n] - mb);
  }
  if (fa.size() >= 2 && va > 0.0 && vb > 0.0) {
    out.corr = cov / std::sqrt(va * vb);
    out.corr_defined = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

MetricRow AggregateRows(const std::vector<MetricRow> &rows) {
  MetricRow agg;
  agg.utt_id = "mean";
  if (rows.empty()) return agg;
  int corr_n = 0, per_n = 0;
  for (const MetricRow &r : rows) {
    agg.mcd_db += r.mcd_db;
    agg.f0_rmse_hz += r.f0_rmse_hz;
    agg.vuv_pct += r.vuv_pct;
    agg.ddur_s += r.ddur_s;
    if (r.f0_corr_defined) {
      agg.f0_corr += r.f0_corr;
      ++corr_n;
    }
    if (r.per_defined) {
      agg.per_pct += r.per_pct;
      ++per_n;
    }
  }
  double n = static_cast<double>(rows.size());
  agg.mcd_db /= n;
  agg.f0_rmse_hz /= n;
  agg.vuv_pct /= n;
  agg.ddur_s /= n;
  if (corr_n > 0) {
    agg.f0_corr /= corr_n;
    agg.f0_corr_defined = true;
  }
  if (per_n > 0) {
    agg.per_pct /= per_n;
    agg.per_defined = true;
  }
  return agg;
}

namespace {

std::string Cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void WriteRow(std::ostream &os, const MetricRow &r) {
  os << r.utt_id << '\t' << Cell(r.mcd_db) << '\t' << Cell(r.f0_rmse_hz)
     << '\t' << Cell(r.vuv_pct) << '\t'
     << (r.f0_corr_defined ? Cell(r.f0_corr) : std::string("na")) << '\t'
     << Cell(r.ddur_s) << '\t'
     << (r.per_defined ? Cell(r.per_pct) : std::string("na")) << '\n';
}

}  // namespace

void WriteMetricTable(const std::string &path,
                      const std::vector<MetricRow> &rows) {
  std::ofstream os(path);
  VC_CHECK(os.good(), "cannot open " + path + " for writing");
  os << "utt_id\tmcd_db\tf0_rmse_hz\tvuv_pct\tf0_corr\tddur_s\tper_pct\n";
  for (const MetricRow &r : rows) WriteRow(os, r);
  WriteRow(os, AggregateRows(rows));
  VC_CHECK(os.good(), "write failed for " + path);
}

// ---------------------------------------------------------------------------
// Projections

namespace {

Matd Pca2(const Matd &x) {
  int n = static_cast<int>(x.rows()), d = static_cast<int>(x.cols());
  Matd centered = x.rowwise() - x.colwise().mean();
  Matd out = Matd::Zero(n, 2);
  if (d == 1) {
    out.col(0) = centered;
    return out;
  }
  Matd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Matd> es(cov);
  VC_CHECK(es.info() == Eigen::Success, "eigen decomposition failed");
  for (int axis = 0; axis < 2; ++axis) {
    Vecd v = es.eigenvectors().col(d - 1 - axis);
    // Deterministic sign: the largest-magnitude loading points up.
    int arg = 0;
    for (int k = 1; k < d; ++k)
      if (std::abs(v[k]) > std::abs(v[arg])) arg = k;
    if (v[arg] < 0.0) v = -v;
    out.col(axis) = centered * v;
  }
  return out;
}

Matd Tsne2(const Matd &x) {
  int n = static_cast<int>(x.rows());
  double perplexity = std::max(1.0, std::min(30.0, (n - 1) / 3.0));
  double target_h = std::log(perplexity);

  Matd d2(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      d2(i, j) = (x.row(i) - x.row(j)).squaredNorm();

  // Per-point precision search for the target perplexity.
  Matd p = Matd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    Vecd row = Vecd::Zero(n);
    for (int it = 0; it < 64; ++it) {
      double sum = 0.0;
      for (int j = 0; j < n; ++j) {
        row[j] = j == i ? 0.0 : std::exp(-beta * d2(i, j));
        sum += row[j];
      }
      if (sum <= 0.0) break;  // isolated point: leave the row uniform below
      double h = 0.0;
      for (int j = 0; j < n; ++j)
        if (row[j] > 0.0) {
          double pj = row[j] / sum;
          h -= pj * std::log(pj);
        }
      if (std::abs(h - target_h) < 1e-5) break;
      if (h > target_h) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
      } else {
        hi = beta;
        beta = (beta + lo) / 2.0;
      }
    }
    double sum = row.sum();
    if (sum > 0.0) {
      p.row(i) = row.transpose() / sum;
    } else {
      for (int j = 0; j < n; ++j) p(i, j) = j == i ? 0.0 : 1.0 / (n - 1);
    }
  }
  Matd pj = (p + p.transpose()) / (2.0 * n);
  pj = pj.cwiseMax(1e-12);

  // Deterministic start from the PCA layout, shrunk to the usual scale.
  Matd y = Pca2(x);
  double spread = std::sqrt(y.array().square().sum() / n);
  if (spread > 0.0) y *= 1e-4 / spread;

  Matd vel = Matd::Zero(n, 2);
  const int iters = 300;
  for (int it = 0; it < iters; ++it) {
    double exaggeration = it < 100 ? 12.0 : 1.0;
    Matd num(n, n);
    double qsum = 0.0;
    for (int i = 0; i < n; ++i) {
      num(i, i) = 0.0;
      for (int j = i + 1; j < n; ++j) {
        double q = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
        num(i, j) = q;
        num(j, i) = q;
        qsum += 2.0 * q;
      }
    }
    qsum = std::max(qsum, 1e-12);
    Matd grad = Matd::Zero(n, 2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        double mult =
            (exaggeration * pj(i, j) - num(i, j) / qsum) * num(i, j);
        grad.row(i) += 4.0 * mult * (y.row(i) - y.row(j));
      }
    double momentum = it < 100 ? 0.5 : 0.8;
    vel = momentum * vel - 100.0 * grad;
    y += vel;
    y.rowwise() -= y.colwise().mean();
  }
  return y;
}

}  // namespace

Matd ProjectEmbeddings(const Matd &x, Projection method) {
  VC_CHECK(x.rows() >= 3, "projection needs at least 3 vectors");
  VC_CHECK(x.cols() >= 1, "projection needs nonempty vectors");
  VC_CHECK(x.allFinite(), "non-finite embedding input");
  Matd y = method == Projection::kPca ? Pca2(x) : Tsne2(x);
  VC_CHECK(y.allFinite(), "projection diverged");
  return y;
}

// ---------------------------------------------------------------------------
// SVG scatter plots

namespace {

const char *kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                          "#bcbd22", "#17becf"};
constexpr int kPaletteSize = 10;

std::string EscapeXml(const std::string &s) {
  std::string out;
  for (char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

}  // namespace

void WriteScatterSvg(const std::string &path,
                     const std::vector<ScatterPoint> &pts,
                     const std::vector<std::string> &label_names,
                     const std::string &title) {
  const double width = 640, height = 480;
  const double left = 50, right = width - 150, top = 50, bottom = height - 30;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (!pts.empty()) {
    xmin = xmax = pts[0].x;
    ymin = ymax = pts[0].y;
    for (const ScatterPoint &p : pts) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  double xpad = (xmax - xmin) * 0.05 + 1e-9;
  double ypad = (ymax - ymin) * 0.05 + 1e-9;
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;
  auto sx = [&](double v) {
    return left + (v - xmin) / (xmax - xmin) * (right - left);
  };
  auto sy = [&](double v) {
    return bottom - (v - ymin) / (ymax - ymin) * (bottom - top);
  };

  std::ofstream os(path);
  VC_CHECK(os.good(), "cannot open " + path + " for writing");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
     << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\""
     << right - left << "\" height=\"" << bottom - top
     << "\" fill=\"none\" stroke=\"#888\"/>\n";
  os << "<text x=\"" << (left + right) / 2 << "\" y=\"30\" font-size=\"16\" "
     << "text-anchor=\"middle\" font-family=\"sans-serif\">"
     << EscapeXml(title) << "</text>\n";
  for (const ScatterPoint &p : pts) {
    const char *color =
        kPalette[((p.label % kPaletteSize) + kPaletteSize) % kPaletteSize];
    double cx = sx(p.x), cy = sy(p.y);
    if (p.marker == 0) {
      os << "<circle cx=\"" << cx << "\" cy=\"" << cy
         << "\" r=\"4\" fill=\"" << color << "\" fill-opacity=\"0.75\"/>\n";
    } else {
      os << "<path d=\"M" << cx - 4 << " " << cy - 4 << " L" << cx + 4 << " "
         << cy + 4 << " M" << cx - 4 << " " << cy + 4 << " L" << cx + 4 << " "
         << cy - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    }
  }
  for (size_t i = 0; i < label_names.size(); ++i) {
    double ly = top + 10 + 20 * static_cast<double>(i);
    const char *color = kPalette[i % kPaletteSize];
    os << "<circle cx=\"" << right + 15 << "\" cy=\"" << ly
       << "\" r=\"5\" fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << right + 26 << "\" y=\"" << ly + 4
       << "\" font-size=\"12\" font-family=\"sans-serif\">"
       << EscapeXml(label_names[i]) << "</text>\n";
  }
  os << "</svg>\n";
  VC_CHECK(os.good(), "write failed for " + path);
}

void WriteLineSvg(const std::string &path,
                  const std::vector<LineSeries> &series,
                  const std::string &title) {
  VC_CHECK(!series.empty(), "no series to plot");
  size_t n = series[0].ys.size();
  VC_CHECK(n >= 1, "empty series " + series[0].label);
  for (const LineSeries &s : series)
    VC_CHECK(s.ys.size() == n, "series length mismatch at " + s.label);

  const double width = 640, height = 400;
  const double left = 60, right = width - 150, top = 50, bottom = height - 40;
  double ymin = series[0].ys[0], ymax = ymin;
  for (const LineSeries &s : series) {
    for (double v : s.ys) {
      VC_CHECK(std::isfinite(v), "non-finite value in series " + s.label);
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  double ypad = (ymax - ymin) * 0.05 + 1e-9;
  ymin -= ypad;
  ymax += ypad;
  auto sx = [&](size_t i) {
    return left + static_cast<double>(i) /
                      static_cast<double>(std::max<size_t>(1, n - 1)) *
                      (right - left);
  };
  auto sy = [&](double v) {
    return bottom - (v - ymin) / (ymax - ymin) * (bottom - top);
  };

  std::ofstream os(path);
  VC_CHECK(os.good(), "cannot open " + path + " for writing");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
     << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\""
     << right - left << "\" height=\"" << bottom - top
     << "\" fill=\"none\" stroke=\"#888\"/>\n";
  os << "<text x=\"" << (left + right) / 2 << "\" y=\"30\" font-size=\"16\" "
     << "text-anchor=\"middle\" font-family=\"sans-serif\">"
     << EscapeXml(title) << "</text>\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", ymax);
  os << "<text x=\"" << left - 6 << "\" y=\"" << top + 4
     << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">"
     << buf << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.4g", ymin);
  os << "<text x=\"" << left - 6 << "\" y=\"" << bottom + 4
     << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">"
     << buf << "</text>\n";
  os << "<text x=\"" << left << "\" y=\"" << bottom + 16
     << "\" font-size=\"11\" font-family=\"sans-serif\">0</text>\n";
  os << "<text x=\"" << right << "\" y=\"" << bottom + 16
     << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">"
     << n - 1 << "</text>\n";
  for (size_t k = 0; k < series.size(); ++k) {
    const char *color = kPalette[k % kPaletteSize];
    if (n == 1) {
      os << "<circle cx=\"" << sx(0) << "\" cy=\"" << sy(series[k].ys[0])
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"1.5\" points=\"";
      for (size_t i = 0; i < n; ++i) {
        if (i > 0) os << ' ';
        os << sx(i) << ',' << sy(series[k].ys[i]);
      }
      os << "\"/>\n";
    }
    double ly = top + 10 + 20 * static_cast<double>(k);
    os << "<line x1=\"" << right + 8 << "\" y1=\"" << ly << "\" x2=\""
       << right + 22 << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << right + 26 << "\" y=\"" << ly + 4
       << "\" font-size=\"12\" font-family=\"sans-serif\">"
       << EscapeXml(series[k].label) << "</text>\n";
  }
  os << "</svg>\n";
  VC_CHECK(os.good(), "write failed for " + path);
}

namespace {

void PutU16(std::ostream &os, uint32_t v) {
  os.put(static_cast<char>(v & 0xff));
  os.put(static_cast<char>((v >> 8) & 0xff));
}

void PutU32(std::ostream &os, uint32_t v) {
  PutU16(os, v & 0xffff);
  PutU16(os, v >> 16);
}

}  // namespace

void WriteHeatmapBmp(const std::string &path, const Matd &m, int scale) {
  VC_CHECK(m.rows() >= 1 && m.cols() >= 1, "empty heatmap matrix");
  VC_CHECK(scale >= 1, "heatmap scale must be >= 1");
  VC_CHECK(m.allFinite(), "non-finite heatmap values");
  double mn = m.minCoeff(), mx = m.maxCoeff();
  int width = static_cast<int>(m.cols()) * scale;
  int height = static_cast<int>(m.rows()) * scale;
  int stride = (width * 3 + 3) & ~3;

  std::ofstream os(path, std::ios::binary);
  VC_CHECK(os.good(), "cannot open " + path + " for writing");
  os << "BM";
  PutU32(os, 54 + static_cast<uint32_t>(stride) * height);
  PutU32(os, 0);
  PutU32(os, 54);
  PutU32(os, 40);
  PutU32(os, static_cast<uint32_t>(width));
  PutU32(os, static_cast<uint32_t>(height));
  PutU16(os, 1);
  PutU16(os, 24);
  PutU32(os, 0);
  PutU32(os, static_cast<uint32_t>(stride) * height);
  PutU32(os, 2835);
  PutU32(os, 2835);
  PutU32(os, 0);
  PutU32(os, 0);

  // Rows are stored bottom-up; matrix row 0 lands at the top of the image.
  for (int iy = height - 1; iy >= 0; --iy) {
    int r = iy / scale;
    for (int ix = 0; ix < width; ++ix) {
      int c = ix / scale;
      int g = 128;
      if (mx > mn)
        g = static_cast<int>(std::lround(255.0 * (m(r, c) - mn) / (mx - mn)));
      g = std::clamp(g, 0, 255);
      char b = static_cast<char>(g);
      os.put(b);
      os.put(b);
      os.put(b);
    }
    for (int p = width * 3; p < stride; ++p) os.put(0);
  }
  VC_CHECK(os.good(), "write failed for " + path);
}

}  // namespace eval
}  // namespace vc
