// tests/test_eval.cc

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
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vc/base/rng.h"
#include "vc/eval/metrics.h"

using vc::Matd;
using namespace vc::eval;

namespace fs = std::filesystem;

namespace {

constexpr double kMcdConst = 10.0 / 2.302585092994046 * 1.4142135623730951;

// Exhaustive minimum over all monotone paths; exponential, fine below 6x6.
double BruteDtwCost(const Matd &a, const Matd &b) {
  std::function<double(int, int)> go = [&](int i, int j) -> double {
    double d = (a.row(i) - b.row(j)).norm();
    if (i == a.rows() - 1 && j == b.rows() - 1) return d;
    double best = std::numeric_limits<double>::infinity();
    if (i + 1 < a.rows()) best = std::min(best, go(i + 1, j));
    if (j + 1 < b.rows()) best = std::min(best, go(i, j + 1));
    if (i + 1 < a.rows() && j + 1 < b.rows())
      best = std::min(best, go(i + 1, j + 1));
    return d + best;
  };
  return go(0, 0);
}

AnalysisTrack TrackOf(const std::vector<double> &f0) {
  AnalysisTrack t;
  t.mcc = Matd::Zero(static_cast<int>(f0.size()), 2);
  t.f0_hz = f0;
  for (double v : f0) t.vuv.push_back(v > 0.0);
  return t;
}

std::vector<std::pair<int, int>> Diagonal(int n) {
  std::vector<std::pair<int, int>> p;
  for (int i = 0; i < n; ++i) p.emplace_back(i, i);
  return p;
}

std::vector<float> Tone(double hz, double seconds, double amp) {
  int n = static_cast<int>(seconds * 16000);
  std::vector<float> wav(n);
  for (int i = 0; i < n; ++i)
    wav[i] = static_cast<float>(amp * std::sin(2.0 * M_PI * hz * i / 16000.0));
  return wav;
}

}  // namespace

TEST_CASE("dtw of identical sequences is the diagonal with zero cost") {
  Matd a(4, 2);
  a << 0, 1, 2, 0, 5, 5, 1, 9;
  DtwResult r = DtwAlign(a, a);
  CHECK(r.cost == 0.0);
  REQUIRE(r.path.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(r.path[i].first == i);
    CHECK(r.path[i].second == i);
  }
}

TEST_CASE("dtw absorbs a duplicated frame at zero cost") {
  Matd a(3, 1), b(4, 1);
  a << 0, 7, 3;
  b << 0, 7, 7, 3;
  DtwResult r = DtwAlign(a, b);
  CHECK(r.cost == 0.0);
  CHECK(r.path.front() == std::pair<int, int>(0, 0));
  CHECK(r.path.back() == std::pair<int, int>(2, 3));
}

TEST_CASE("dtw matches a brute force search on small instances") {
  // A 3x3 instance whose optimal path is unique: the pure diagonal.
  Matd a(3, 1), b(3, 1);
  a << 0, 2, 10;
  b << 0, 3, 10;
  DtwResult r = DtwAlign(a, b);
  CHECK(r.cost == doctest::Approx(1.0));
  REQUIRE(r.path.size() == 3);
  CHECK(r.path[1] == std::pair<int, int>(1, 1));

  std::mt19937_64 rng = vc::MakeRng(3, vc::kStreamTest, 0);
  std::uniform_int_distribution<int> len(1, 6), dim(1, 3);
  std::normal_distribution<double> val(0.0, 2.0);
  for (int trial = 0; trial < 60; ++trial) {
    int d = dim(rng);
    Matd x(len(rng), d), y(len(rng), d);
    for (int i = 0; i < x.rows(); ++i)
      for (int j = 0; j < d; ++j) x(i, j) = val(rng);
    for (int i = 0; i < y.rows(); ++i)
      for (int j = 0; j < d; ++j) y(i, j) = val(rng);
    CHECK(DtwAlign(x, y).cost == doctest::Approx(BruteDtwCost(x, y)));
  }
}

TEST_CASE("mcd formula oracles") {
  Matd zero = Matd::Zero(1, 41);
  CHECK(Mcd(zero, zero, {{0, 0}}) == 0.0);

  Matd one = zero;
  one(0, 7) = 1.0;  // a unit offset in one cepstral dimension
  double got = Mcd(zero, one, {{0, 0}});
  CHECK(std::abs(got - kMcdConst) < 1e-9);
  CHECK(std::abs(got - 6.1421) < 1e-3);

  Matd energy = zero;
  energy(0, 0) = 100.0;  // the energy coefficient is excluded
  CHECK(Mcd(zero, energy, {{0, 0}}) == 0.0);

  Matd ab = zero;
  ab(0, 1) = 3.0;
  ab(0, 2) = 4.0;
  CHECK(Mcd(zero, ab, {{0, 0}}) ==
        doctest::Approx(10.0 / std::log(10.0) * std::sqrt(2.0 * 25.0)));

  // Mean over the path, not a sum.
  Matd a2 = Matd::Zero(2, 3), b2 = Matd::Zero(2, 3);
  b2(0, 1) = 1.0;
  b2(1, 1) = 1.0;
  CHECK(Mcd(a2, b2, Diagonal(2)) == doctest::Approx(kMcdConst));
}

TEST_CASE("f0 metrics on aligned tracks") {
  AnalysisTrack a = TrackOf({100, 110, 120, 0});
  auto path = Diagonal(4);

  F0Metrics same = F0Compare(a, a, path);
  CHECK(same.rmse_hz == 0.0);
  CHECK(same.corr_defined);
  CHECK(same.corr == doctest::Approx(1.0));
  CHECK(same.vuv_pct == 0.0);

  AnalysisTrack shifted = TrackOf({110, 120, 130, 0});
  F0Metrics sh = F0Compare(a, shifted, path);
  CHECK(sh.rmse_hz == doctest::Approx(10.0));
  CHECK(sh.corr_defined);
  CHECK(sh.corr == doctest::Approx(1.0));
  CHECK(sh.vuv_pct == 0.0);

  AnalysisTrack flat = TrackOf({100, 100, 100, 0});
  F0Metrics fl = F0Compare(a, flat, path);
  CHECK_FALSE(fl.corr_defined);
  CHECK(fl.rmse_hz > 0.0);

  AnalysisTrack half = TrackOf({100, 0});
  AnalysisTrack full = TrackOf({100, 100});
  F0Metrics vm = F0Compare(half, full, Diagonal(2));
  CHECK(vm.vuv_pct == doctest::Approx(50.0));

  AnalysisTrack silent = TrackOf({0, 0});
  F0Metrics none = F0Compare(silent, full, Diagonal(2));
  CHECK(none.vuv_pct == doctest::Approx(100.0));
  CHECK_FALSE(none.corr_defined);
  CHECK(none.rmse_hz == 0.0);
}

TEST_CASE("ddur and per oracles") {
  CHECK(Ddur(2.0, 2.5) == doctest::Approx(0.5));
  CHECK(Ddur(2.5, 2.0) == Ddur(2.0, 2.5));
  CHECK(Ddur(1.25, 1.25) == 0.0);

  std::vector<int> ref10 = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> sub10 = {0, 1, 2, 3, 4, 5, 6, 7, 8, 11};
  CHECK(PerPct(ref10, ref10) == 0.0);
  CHECK(PerPct(sub10, ref10) == doctest::Approx(10.0));
  CHECK(PerPct({}, {1, 2, 3, 4, 5}) == doctest::Approx(100.0));
  CHECK_THROWS_AS(PerPct({1}, {}), vc::Error);
}

TEST_CASE("waveform analysis tracks tone pitch") {
  vc::dsp::AudioConfig cfg;
  auto wav = Tone(200.0, 0.5, 0.5);
  AnalysisTrack tr = AnalyzeWaveform(wav, cfg);
  CHECK(tr.mcc.cols() == 41);
  CHECK(tr.mcc.rows() == static_cast<int>(tr.f0_hz.size()));
  int voiced = 0;
  for (int i = 0; i < tr.Frames(); ++i) {
    CHECK(tr.vuv[i] == (tr.f0_hz[i] > 0.0));
    if (tr.vuv[i]) {
      ++voiced;
      CHECK(std::abs(tr.f0_hz[i] - 200.0) <= 3.0);
    }
  }
  CHECK(voiced > tr.Frames() / 2);

  AnalysisTrack again = AnalyzeWaveform(wav, cfg);
  CHECK((tr.mcc - again.mcc).cwiseAbs().maxCoeff() == 0.0);
  CHECK(tr.f0_hz == again.f0_hz);

  std::vector<float> silence(4800, 0.0f);
  AnalysisTrack quiet = AnalyzeWaveform(silence, cfg);
  for (bool v : quiet.vuv) CHECK_FALSE(v);
}

TEST_CASE("mcc of a constant spectrum concentrates in the energy term") {
  Matd logmel = Matd::Constant(5, 80, -3.0);
  Matd mcc = MccFromLogMel(logmel, 41);
  REQUIRE(mcc.rows() == 5);
  REQUIRE(mcc.cols() == 41);
  CHECK(mcc(2, 0) == doctest::Approx(-3.0 * std::sqrt(80.0)));
  for (int d = 1; d < 41; ++d) CHECK(std::abs(mcc(2, d)) < 1e-9);
}

TEST_CASE("pca projection preserves planar geometry") {
  // Points on a plane spanned by two coordinate axes of a 7-D space.
  std::mt19937_64 rng = vc::MakeRng(3, vc::kStreamTest, 1);
  std::normal_distribution<double> val(0.0, 1.0);
  int n = 12;
  Matd x = Matd::Zero(n, 7);
  for (int i = 0; i < n; ++i) {
    x(i, 2) = val(rng);
    x(i, 5) = val(rng);
    x.row(i).array() += 0.5;  // common offset, removed by centering
  }
  Matd y = ProjectEmbeddings(x, Projection::kPca);
  REQUIRE(y.rows() == n);
  REQUIRE(y.cols() == 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      CHECK((y.row(i) - y.row(j)).norm() ==
            doctest::Approx((x.row(i) - x.row(j)).norm()).epsilon(1e-9));

  Matd dup(3, 4);
  dup << 1, 2, 3, 4, 1, 2, 3, 4, 0, 0, 0, 0;
  Matd yd = ProjectEmbeddings(dup, Projection::kPca);
  CHECK((yd.row(0) - yd.row(1)).norm() < 1e-9);

  Matd two = Matd::Zero(2, 4);
  CHECK_THROWS_AS(ProjectEmbeddings(two, Projection::kPca), vc::Error);
}

TEST_CASE("tsne is deterministic and separates distinct clusters") {
  std::mt19937_64 rng = vc::MakeRng(3, vc::kStreamTest, 2);
  std::normal_distribution<double> noise(0.0, 0.1);
  int per = 6;
  Matd x(2 * per, 10);
  for (int i = 0; i < 2 * per; ++i) {
    double center = i < per ? -10.0 : 10.0;
    for (int j = 0; j < 10; ++j) x(i, j) = center + noise(rng);
  }
  Matd y = ProjectEmbeddings(x, Projection::kTsne);
  REQUIRE(y.rows() == 2 * per);
  REQUIRE(y.cols() == 2);

  double intra = 0, inter = 0;
  int ni = 0, nx = 0;
  for (int i = 0; i < 2 * per; ++i)
    for (int j = i + 1; j < 2 * per; ++j) {
      double d = (y.row(i) - y.row(j)).norm();
      if ((i < per) == (j < per)) {
        intra += d;
        ++ni;
      } else {
        inter += d;
        ++nx;
      }
    }
  CHECK(inter / nx > intra / ni);

  Matd y2 = ProjectEmbeddings(x, Projection::kTsne);
  CHECK((y - y2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("metric table writes rows and aggregate") {
  MetricRow r1;
  r1.utt_id = "u1";
  r1.mcd_db = 4.0;
  r1.f0_rmse_hz = 12.0;
  r1.vuv_pct = 5.0;
  r1.f0_corr = 0.8;
  r1.f0_corr_defined = true;
  r1.ddur_s = 0.3;
  r1.per_pct = 10.0;
  r1.per_defined = true;
  MetricRow r2;
  r2.utt_id = "u2";
  r2.mcd_db = 6.0;
  r2.f0_rmse_hz = 8.0;
  r2.vuv_pct = 15.0;
  r2.ddur_s = 0.1;  // corr and per left undefined

  MetricRow agg = AggregateRows({r1, r2});
  CHECK(agg.utt_id == "mean");
  CHECK(agg.mcd_db == doctest::Approx(5.0));
  CHECK(agg.f0_rmse_hz == doctest::Approx(10.0));
  CHECK(agg.vuv_pct == doctest::Approx(10.0));
  CHECK(agg.ddur_s == doctest::Approx(0.2));
  CHECK(agg.f0_corr_defined);
  CHECK(agg.f0_corr == doctest::Approx(0.8));  // mean over defined rows
  CHECK(agg.per_defined);
  CHECK(agg.per_pct == doctest::Approx(10.0));

  fs::path path = fs::temp_directory_path() / "vc_test_metrics.tsv";
  WriteMetricTable(path.string(), {r1, r2});
  std::ifstream is(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] ==
        "utt_id\tmcd_db\tf0_rmse_hz\tvuv_pct\tf0_corr\tddur_s\tper_pct");
  CHECK(lines[1].substr(0, 3) == "u1\t");
  CHECK(lines[2].find("\tna\t") != std::string::npos);  // undefined corr
  CHECK(lines[3].substr(0, 5) == "mean\t");
  fs::remove(path);
}

TEST_CASE("scatter svg contains the points and legend") {
  std::vector<ScatterPoint> pts = {
      {0.0, 0.0, 0, 0}, {1.0, 1.0, 1, 1}, {2.0, 0.5, 0, 0}};
  fs::path path = fs::temp_directory_path() / "vc_test_scatter.svg";
  WriteScatterSvg(path.string(), pts, {"alpha", "beta"}, "speakers a<b");
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  std::string svg = ss.str();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("alpha") != std::string::npos);
  CHECK(svg.find("beta") != std::string::npos);
  CHECK(svg.find("a&lt;b") != std::string::npos);
  CHECK(svg.find("<path d=") != std::string::npos);  // the cross marker
  fs::remove(path);
}

TEST_CASE("line chart svg plots every series") {
  std::vector<LineSeries> series = {{"l_rc", {3.0, 2.0, 1.0}},
                                    {"l_tc", {1.0, 1.0, 1.0}}};
  fs::path path = fs::temp_directory_path() / "vc_test_lines.svg";
  WriteLineSvg(path.string(), series, "losses a<b");
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  std::string svg = ss.str();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("l_rc") != std::string::npos);
  CHECK(svg.find("l_tc") != std::string::npos);
  CHECK(svg.find("a&lt;b") != std::string::npos);
  size_t first = svg.find("<polyline");
  REQUIRE(first != std::string::npos);
  CHECK(svg.find("<polyline", first + 1) != std::string::npos);

  // Byte-identical on rewrite.
  WriteLineSvg(path.string(), series, "losses a<b");
  std::ifstream is2(path);
  std::stringstream ss2;
  ss2 << is2.rdbuf();
  CHECK(ss2.str() == svg);
  fs::remove(path);

  // A single sample degenerates to a dot, not a polyline.
  WriteLineSvg(path.string(), {{"x", {5.0}}}, "dot");
  std::ifstream is3(path);
  std::stringstream ss3;
  ss3 << is3.rdbuf();
  CHECK(ss3.str().find("<circle") != std::string::npos);
  CHECK(ss3.str().find("<polyline") == std::string::npos);
  fs::remove(path);

  CHECK_THROWS_AS(WriteLineSvg(path.string(), {}, "t"), vc::Error);
  CHECK_THROWS_AS(
      WriteLineSvg(path.string(), {{"a", {1.0}}, {"b", {1.0, 2.0}}}, "t"),
      vc::Error);
}

TEST_CASE("heatmap bmp encodes the normalized matrix") {
  Matd m(2, 3);
  m << 0, 1, 2, 3, 4, 5;
  fs::path path = fs::temp_directory_path() / "vc_test_heat.bmp";
  WriteHeatmapBmp(path.string(), m, 2);
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  std::string bytes = ss.str();
  auto u8 = [&](size_t i) { return static_cast<unsigned char>(bytes[i]); };
  auto u32 = [&](size_t i) {
    return static_cast<uint32_t>(u8(i)) | (static_cast<uint32_t>(u8(i + 1)) << 8) |
           (static_cast<uint32_t>(u8(i + 2)) << 16) |
           (static_cast<uint32_t>(u8(i + 3)) << 24);
  };
  // 6x4 pixels, 3 bytes each, rows padded to 20 bytes.
  REQUIRE(bytes.size() == 54 + 20 * 4);
  CHECK(bytes[0] == 'B');
  CHECK(bytes[1] == 'M');
  CHECK(u32(2) == bytes.size());
  CHECK(u32(10) == 54);
  CHECK(u32(18) == 6);   // width
  CHECK(u32(22) == 4);   // height
  // Bottom-up storage: the first stored row is matrix row 1, whose first
  // entry 3 maps to round(255*3/5) = 153; the last stored row starts at 0.
  CHECK(u8(54) == 153);
  CHECK(u8(54 + 20 * 3) == 0);

  WriteHeatmapBmp(path.string(), m, 2);
  std::ifstream is2(path, std::ios::binary);
  std::stringstream ss2;
  ss2 << is2.rdbuf();
  CHECK(ss2.str() == bytes);
  fs::remove(path);

  // A constant matrix renders mid-gray.
  WriteHeatmapBmp(path.string(), Matd::Ones(2, 2), 1);
  std::ifstream is3(path, std::ios::binary);
  std::stringstream ss3;
  ss3 << is3.rdbuf();
  std::string flat = ss3.str();
  REQUIRE(flat.size() == 54 + 8 * 2);
  for (int r = 0; r < 2; ++r)
    for (int k = 0; k < 6; ++k)
      CHECK(static_cast<unsigned char>(flat[54 + 8 * r + k]) == 128);
  fs::remove(path);

  CHECK_THROWS_AS(WriteHeatmapBmp(path.string(), Matd(0, 0), 1), vc::Error);
}
