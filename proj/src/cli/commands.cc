// src/cli/commands.cc

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

#include "vc/cli/commands.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vc/base/io.h"
#include "vc/cli/config.h"
#include "vc/convert/convert.h"
#include "vc/corpus/corpus.h"
#include "vc/corpus/synth.h"
#include "vc/eval/metrics.h"
#include "vc/model/checkpoint.h"
#include "vc/train/train.h"

namespace vc {
namespace cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string Fixed(double v, int prec) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

std::string ResolveManifest(const std::string &path) {
  if (fs::is_directory(path)) return (fs::path(path) / "manifest.txt").string();
  return path;
}

std::vector<std::string> SplitCommas(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t b = item.find_first_not_of(" \t");
    size_t e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// The frozen effective configuration; rerunning from this file reproduces
// the run.
void WriteRunConfig(const std::string &out_dir, const RunConfig &cfg,
                    const std::string &command, const json &inputs) {
  fs::create_directories(out_dir);
  json j;
  RunConfigToJson(cfg, &j);
  j["command"] = command;
  j["inputs"] = inputs;
  WriteTextFile(out_dir + "/run_config.json", j.dump(2) + "\n");
}

void WriteCurves(const std::string &out_dir,
                 const std::vector<train::StepRecord> &records,
                 const std::vector<double> &val_pers) {
  if (!records.empty()) {
    static const char *kNames[] = {"l_tc", "l_ct", "l_adv", "l_sc",
                                   "l_se", "l_rc", "l_ed"};
    static constexpr double losses::LossReport::*kFields[] = {
        &losses::LossReport::l_tc, &losses::LossReport::l_ct,
        &losses::LossReport::l_adv, &losses::LossReport::l_sc,
        &losses::LossReport::l_se, &losses::LossReport::l_rc,
        &losses::LossReport::l_ed};
    std::vector<eval::LineSeries> series(7);
    size_t stride = std::max<size_t>(1, records.size() / 1000);
    for (int k = 0; k < 7; ++k) {
      series[k].label = kNames[k];
      for (size_t i = 0; i < records.size(); i += stride)
        series[k].ys.push_back(records[i].report.*kFields[k]);
    }
    eval::WriteLineSvg(out_dir + "/loss_curves.svg", series,
                       "training losses per step");
  }
  if (!val_pers.empty() && val_pers.front() >= 0) {
    eval::LineSeries s;
    s.label = "val_per_pct";
    for (double v : val_pers) s.ys.push_back(100.0 * v);
    eval::WriteLineSvg(out_dir + "/val_per.svg", {s},
                       "validation PER per epoch");
  }
}

std::string TrainSummary(const std::string &cmd,
                         const train::TrainConfig &tc,
                         const std::vector<train::StepRecord> &records,
                         const std::vector<double> &val_pers,
                         const std::string &out_dir) {
  std::ostringstream os;
  os << cmd << ": ";
  if (records.empty()) {
    os << "up to date at epoch " << tc.epochs << ", ";
  } else {
    std::string vp = (val_pers.empty() || val_pers.back() < 0)
                         ? std::string("na")
                         : Fixed(100.0 * val_pers.back(), 2) + "%";
    os << records.size() << " steps, " << tc.epochs << " epochs, l_rc "
       << Fixed(records.back().report.l_rc, 6) << ", val per " << vp << ", ";
  }
  os << "ckpt fnv " << FileDigest(train::EpochCkptPath(out_dir, tc.epochs - 1))
     << " -> " << out_dir;
  return os.str();
}

// -------------------------------------------------------------------------
// Command bodies; each returns its summary line.

std::string CmdMakeToy(const RunConfig &cfg, const std::string &out_dir) {
  corpus::SynthSpec spec = cfg.synth;
  spec.seed = cfg.seed;
  corpus::Corpus data = corpus::MakeSyntheticCorpus(spec);
  WriteRunConfig(out_dir, cfg, "make-toy-corpus", {{"out", out_dir}});
  corpus::WriteCorpus(data, out_dir);
  std::ostringstream os;
  os << "make-toy-corpus: " << data.utts.size() << " utterances, "
     << data.NumSpeakers() << " speakers, inventory " << data.InventorySize()
     << ", seed " << cfg.seed << " -> " << out_dir;
  return os.str();
}

std::string CmdPreprocess(const RunConfig &cfg, const std::string &manifest,
                          const std::string &out_dir) {
  corpus::Corpus data = corpus::LoadCorpus(manifest, cfg.audio);
  WriteRunConfig(out_dir, cfg, "preprocess",
                 {{"manifest", manifest}, {"out", out_dir}});
  corpus::WriteCorpus(data, out_dir);
  int64_t frames = 0;
  for (const auto &u : data.utts) frames += u.mel.rows();
  std::ostringstream os;
  os << "preprocess: " << data.utts.size() << " utterances, "
     << data.NumSpeakers() << " speakers, " << frames << " frames -> "
     << out_dir;
  return os.str();
}

std::string CmdPretrain(const RunConfig &cfg, const std::string &corpus_path,
                        const std::string &out_dir, bool resume) {
  corpus::Corpus data =
      corpus::LoadCorpus(ResolveManifest(corpus_path), cfg.audio);
  train::TrainConfig tc = cfg.pretrain;
  tc.seed = cfg.seed;
  ApplyAblations(cfg.ablations, &tc);
  VC_CHECK(!tc.no_pretrain,
           "the no_pretrain ablation applies to the finetune command");

  model::ModelConfig mc = cfg.model;
  mc.inventory = data.InventorySize();
  mc.n_speakers = data.NumSpeakers();
  model::Model<Real> m;
  m.Build(mc, cfg.seed);
  m.inventory_names = data.inventory;
  m.speaker_names = data.speakers;

  WriteRunConfig(out_dir, cfg, "pretrain",
                 {{"corpus", corpus_path}, {"out", out_dir},
                  {"resume", resume}});
  std::vector<train::StepRecord> records;
  std::vector<double> val_pers;
  train::Pretrain(&m, data, tc, out_dir, resume, &records, &val_pers);
  WriteCurves(out_dir, records, val_pers);
  return TrainSummary("pretrain", tc, records, val_pers, out_dir);
}

std::string CmdFinetune(const RunConfig &cfg, const std::string &corpus_path,
                        const std::string &init, const std::string &out_dir,
                        bool resume) {
  corpus::Corpus pair =
      corpus::LoadCorpus(ResolveManifest(corpus_path), cfg.audio);
  train::TrainConfig tc = cfg.finetune;
  tc.seed = cfg.seed;
  ApplyAblations(cfg.ablations, &tc);

  model::Model<Real> m;
  if (tc.no_pretrain) {
    VC_CHECK(init.empty(), "--init conflicts with the no_pretrain ablation");
    model::ModelConfig mc = cfg.model;
    mc.inventory = pair.InventorySize();
    mc.n_speakers = 2;
    m.Build(mc, cfg.seed);
    m.inventory_names = pair.inventory;
    m.speaker_names = pair.speakers;
  } else {
    VC_CHECK(!init.empty(),
             "finetune needs --init CKPT (or the no_pretrain ablation)");
    model::LoadModel(init, &m);
    VC_CHECK(m.inventory_names == pair.inventory,
             "checkpoint and pair corpus disagree on the phoneme inventory");
  }
  model::FinetuneBlob<Real> blob = train::InitFinetune(&m, pair, cfg.seed);

  WriteRunConfig(out_dir, cfg, "finetune",
                 {{"corpus", corpus_path}, {"init", init}, {"out", out_dir},
                  {"resume", resume}});
  std::vector<train::StepRecord> records;
  std::vector<double> val_pers;
  train::Finetune(&m, blob, pair, tc, out_dir, resume, &records, &val_pers);
  WriteCurves(out_dir, records, val_pers);
  return TrainSummary("finetune", tc, records, val_pers, out_dir);
}

std::string CmdConvert(const RunConfig &cfg, const std::string &ckpt,
                       const std::string &target, const std::string &in_file,
                       const std::string &corpus_path,
                       const std::string &out_dir, bool wav, int limit) {
  VC_CHECK(in_file.empty() != corpus_path.empty(),
           "exactly one of --in and --corpus is required");
  model::Model<Real> m;
  model::FinetuneBlob<Real> blob;
  model::LoadModel(ckpt, &m, &blob);
  VC_CHECK(blob.embed.rows() > 0,
           "checkpoint " + ckpt +
               " has no speaker embedding table; run finetune first");
  VC_CHECK(!m.inventory_names.empty(), "checkpoint lacks phoneme names");
  int row = convert::ResolveSpeaker(blob, target);

  std::vector<std::pair<std::string, Matf>> inputs;
  if (!in_file.empty()) {
    Matf mel;
    if (in_file.size() >= 4 &&
        in_file.compare(in_file.size() - 4, 4, ".wav") == 0) {
      int rate = 0;
      std::vector<float> w = ReadWav(in_file, &rate);
      VC_CHECK(rate == cfg.audio.sample_rate,
               "sample rate mismatch in " + in_file);
      mel = dsp::ExtractMel(w, cfg.audio);
    } else {
      mel = LoadMat(in_file);
    }
    inputs.emplace_back(fs::path(in_file).stem().string(), std::move(mel));
  } else {
    corpus::Corpus data =
        corpus::LoadCorpus(ResolveManifest(corpus_path), cfg.audio);
    size_t n = data.utts.size();
    if (limit > 0) n = std::min(n, static_cast<size_t>(limit));
    for (size_t i = 0; i < n; ++i)
      inputs.emplace_back(data.utts[i].utt_id, data.utts[i].mel);
  }

  WriteRunConfig(out_dir, cfg, "convert",
                 {{"ckpt", ckpt}, {"target", target}, {"in", in_file},
                  {"corpus", corpus_path}, {"out", out_dir}, {"wav", wav},
                  {"limit", limit}});
  if (wav) fs::create_directories(fs::path(out_dir) / "wavs");

  corpus::Corpus oc;
  oc.speakers = {target};
  oc.inventory = m.inventory_names;
  int eos = static_cast<int>(oc.inventory.size()) - 1;
  std::ostringstream tsv;
  tsv << "utt_id\tsrc_frames\tout_frames\tratio\tphonemes\tlog_prob\t"
         "truncated\tcapped\tstatus\n";
  std::vector<double> ratios;
  int n_trunc = 0, n_capped = 0, n_empty = 0, n_failed = 0;
  bool attn_done = false;
  for (auto &[id, mel] : inputs) {
    try {
      convert::ConvertResult<Real> r =
          convert::Convert(m, blob, mel, row, cfg.beam_width);
      int n_sym = 0;
      for (int p : r.phonemes)
        if (p != eos) ++n_sym;
      double ratio = static_cast<double>(r.mel.rows()) /
                     static_cast<double>(mel.rows());
      ratios.push_back(ratio);
      if (r.rec_truncated) ++n_trunc;
      if (r.dec_capped) ++n_capped;
      tsv << id << '\t' << mel.rows() << '\t' << r.mel.rows() << '\t'
          << Fixed(ratio, 6) << '\t' << n_sym << '\t'
          << Fixed(r.log_prob, 6) << '\t' << (r.rec_truncated ? 1 : 0)
          << '\t' << (r.dec_capped ? 1 : 0) << '\t';
      if (n_sym == 0) {
        ++n_empty;
        tsv << "empty\n";
        continue;
      }
      tsv << "ok\n";
      if (!attn_done) {
        eval::WriteHeatmapBmp(out_dir + "/" + id + "_rec_attn.bmp",
                              r.rec_alignment.cast<double>());
        eval::WriteHeatmapBmp(out_dir + "/" + id + "_dec_attn.bmp",
                              r.dec_alignment.cast<double>());
        attn_done = true;
      }
      if (wav)
        WriteWav((fs::path(out_dir) / "wavs" / (id + ".wav")).string(),
                 dsp::GriffinLim(r.mel, cfg.audio), cfg.audio.sample_rate);
      corpus::Utterance u;
      u.utt_id = id;
      u.speaker = 0;
      u.phonemes = r.phonemes;
      if (u.phonemes.empty() || u.phonemes.back() != eos)
        u.phonemes.push_back(eos);
      u.mel = r.mel;
      u.duration_s = static_cast<double>(r.mel.rows()) * cfg.audio.hop /
                     cfg.audio.sample_rate;
      oc.utts.push_back(std::move(u));
    } catch (const Error &) {
      ++n_failed;
      tsv << id << '\t' << mel.rows() << "\t0\tna\t0\tna\t0\t0\tfailed\n";
    }
  }
  if (!oc.utts.empty()) corpus::WriteCorpus(oc, out_dir);
  WriteTextFile(out_dir + "/conversions.tsv", tsv.str());

  std::ostringstream os;
  os << "convert: " << oc.utts.size() << "/" << inputs.size()
     << " utterances to " << target << ", median length ratio "
     << (ratios.empty() ? std::string("na") : Fixed(Median(ratios), 4))
     << ", " << n_trunc << " truncated, " << n_capped << " capped, "
     << n_empty << " empty, " << n_failed << " failed -> " << out_dir;
  return os.str();
}

std::string CmdEvaluate(const RunConfig &cfg, const std::string &converted,
                        const std::string &reference,
                        const std::string &out_dir) {
  corpus::Corpus conv =
      corpus::LoadCorpus(ResolveManifest(converted), cfg.audio);
  corpus::Corpus ref =
      corpus::LoadCorpus(ResolveManifest(reference), cfg.audio);
  std::map<std::string, const corpus::Utterance *> by_id;
  for (const auto &u : ref.utts) by_id[u.utt_id] = &u;

  WriteRunConfig(out_dir, cfg, "evaluate",
                 {{"converted", converted}, {"reference", reference},
                  {"out", out_dir}});

  std::vector<eval::MetricRow> rows;
  for (const auto &cu : conv.utts) {
    auto it = by_id.find(cu.utt_id);
    if (it == by_id.end()) continue;
    const corpus::Utterance &ru = *it->second;
    eval::AnalysisTrack ta =
        eval::AnalyzeWaveform(dsp::GriffinLim(cu.mel, cfg.audio), cfg.audio);
    eval::AnalysisTrack tb =
        eval::AnalyzeWaveform(dsp::GriffinLim(ru.mel, cfg.audio), cfg.audio);
    eval::DtwResult dtw = eval::DtwAlign(ta.mcc, tb.mcc);

    eval::MetricRow row;
    row.utt_id = cu.utt_id;
    row.mcd_db = eval::Mcd(ta.mcc, tb.mcc, dtw.path);
    eval::F0Metrics f0 = eval::F0Compare(ta, tb, dtw.path);
    row.f0_rmse_hz = f0.rmse_hz;
    row.vuv_pct = f0.vuv_pct;
    row.f0_corr = f0.corr;
    row.f0_corr_defined = f0.corr_defined;
    row.ddur_s = eval::Ddur(cu.duration_s, ru.duration_s);

    // PER over phoneme symbols so the two manifests need not share an
    // inventory table.
    std::map<std::string, int> dict;
    auto as_ids = [&dict](const corpus::Corpus &c,
                          const corpus::Utterance &u) {
      std::vector<int> v;
      for (int id : u.phonemes) {
        const std::string &sym = c.inventory[id];
        if (sym == "<eos>") continue;
        v.push_back(dict.emplace(sym, static_cast<int>(dict.size()))
                        .first->second);
      }
      return v;
    };
    std::vector<int> hyp = as_ids(conv, cu);
    std::vector<int> tgt = as_ids(ref, ru);
    row.per_pct = eval::PerPct(hyp, tgt);
    row.per_defined = true;
    rows.push_back(row);
  }
  VC_CHECK(!rows.empty(), "no utterance ids shared between " + converted +
                              " and " + reference);
  eval::WriteMetricTable(out_dir + "/metrics.tsv", rows);
  eval::MetricRow agg = eval::AggregateRows(rows);

  std::ostringstream os;
  os << "evaluate: " << rows.size() << " pairs, mcd " << Fixed(agg.mcd_db, 6)
     << " dB, f0 rmse " << Fixed(agg.f0_rmse_hz, 6) << " Hz, vuv "
     << Fixed(agg.vuv_pct, 2) << "%, f0 corr "
     << (agg.f0_corr_defined ? Fixed(agg.f0_corr, 4) : std::string("na"))
     << ", ddur " << Fixed(agg.ddur_s, 4) << " s, per "
     << Fixed(agg.per_pct, 2) << "% -> " << out_dir;
  return os.str();
}

std::string CmdVisualize(const RunConfig &cfg, const std::string &ckpt,
                         const std::string &corpus_path,
                         const std::string &out_dir,
                         const std::string &method, int max_points) {
  VC_CHECK(method == "tsne" || method == "pca",
           "--method must be tsne or pca");
  VC_CHECK(max_points >= 6, "--max-points must be at least 6");
  model::Model<Real> m;
  model::FinetuneBlob<Real> blob;
  model::LoadModel(ckpt, &m, &blob);
  corpus::Corpus data =
      corpus::LoadCorpus(ResolveManifest(corpus_path), cfg.audio);
  VC_CHECK(m.inventory_names == data.inventory,
           "checkpoint and corpus disagree on the phoneme inventory");
  VC_CHECK(m.cfg.te_out == m.cfg.re_out,
           "text and recognition embeddings have different widths");
  int n = static_cast<int>(data.utts.size());
  VC_CHECK(n >= 3, "visualization needs at least 3 utterances");
  int take = std::min(n, std::max(3, max_points / 2));

  std::vector<int> order = corpus::ShuffledIndices(n, cfg.seed, 0);
  order.resize(take);
  std::sort(order.begin(), order.end());

  Matd spk_x(take, m.cfg.se_out);
  Matd ling(2 * take, m.cfg.te_out);
  std::vector<int> labels(take);
  for (int k = 0; k < take; ++k) {
    const corpus::Utterance &u = data.utts[order[k]];
    ad::Tape<Real> t(false);
    model::Batch<Real> b;
    b.phonemes = {u.phonemes};
    b.phon_lens = {static_cast<int>(u.phonemes.size())};
    b.mel_lens = {static_cast<int>(u.mel.rows())};
    b.speakers = {u.speaker};
    for (int r = 0; r < u.mel.rows(); ++r)
      b.mel_steps.push_back(u.mel.row(r));
    auto mel_nodes = model::MelStepNodes(t, b);
    auto spk = m.es.Forward(t, mel_nodes, b.mel_lens);
    spk_x.row(k) = spk.normalized->val.row(0).cast<double>();
    model::RunFlags<Real> run;
    auto *ht = m.et.Forward(t, b.phonemes, b.phon_lens, run);
    ling.row(k) = ht->val.colwise().mean().cast<double>();
    auto rec = m.er.TeacherForward(t, mel_nodes, b.mel_lens, b.phonemes,
                                   b.phon_lens);
    ling.row(take + k) = rec.hr_seg->val.colwise().mean().cast<double>();
    labels[k] = u.speaker;
  }

  WriteRunConfig(out_dir, cfg, "visualize",
                 {{"ckpt", ckpt}, {"corpus", corpus_path}, {"out", out_dir},
                  {"method", method}, {"max_points", max_points}});
  eval::Projection proj =
      (method == "pca") ? eval::Projection::kPca : eval::Projection::kTsne;

  Matd p_spk = eval::ProjectEmbeddings(spk_x, proj);
  std::vector<eval::ScatterPoint> pts;
  for (int k = 0; k < take; ++k)
    pts.push_back({p_spk(k, 0), p_spk(k, 1), labels[k], 0});
  eval::WriteScatterSvg(out_dir + "/speakers.svg", pts, data.speakers,
                        "speaker embeddings (" + method + ")");
  std::ostringstream st;
  st << "utt_id\tspeaker\tx\ty\n";
  for (int k = 0; k < take; ++k)
    st << data.utts[order[k]].utt_id << '\t' << data.speakers[labels[k]]
       << '\t' << Fixed(p_spk(k, 0), 6) << '\t' << Fixed(p_spk(k, 1), 6)
       << '\n';
  WriteTextFile(out_dir + "/speakers.tsv", st.str());

  Matd p_ling = eval::ProjectEmbeddings(ling, proj);
  pts.clear();
  for (int k = 0; k < take; ++k)
    pts.push_back({p_ling(k, 0), p_ling(k, 1), labels[k], 1});
  for (int k = 0; k < take; ++k)
    pts.push_back({p_ling(take + k, 0), p_ling(take + k, 1), labels[k], 0});
  eval::WriteScatterSvg(out_dir + "/linguistic.svg", pts, data.speakers,
                        "linguistic embeddings, cross = text, circle = "
                        "audio (" + method + ")");
  std::ostringstream lt;
  lt << "utt_id\tmodality\tspeaker\tx\ty\n";
  for (int k = 0; k < 2 * take; ++k) {
    int u = k % take;
    lt << data.utts[order[u]].utt_id << '\t'
       << (k < take ? "text" : "audio") << '\t' << data.speakers[labels[u]]
       << '\t' << Fixed(p_ling(k, 0), 6) << '\t' << Fixed(p_ling(k, 1), 6)
       << '\n';
  }
  WriteTextFile(out_dir + "/linguistic.tsv", lt.str());

  std::ostringstream os;
  os << "visualize: " << take << " speaker points, " << 2 * take
     << " linguistic points, method " << method << " -> " << out_dir;
  return os.str();
}

}  // namespace

std::string FileDigest(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  VC_CHECK(is.good(), "cannot open " + path);
  uint64_t h = 14695981039346656037ULL;
  char buf[65536];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    std::streamsize got = is.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!is) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

int RunCli(const std::vector<std::string> &args, std::ostream &out,
           std::ostream &err) {
  CLI::App app{"non-parallel voice conversion pipeline", "vc"};
  app.require_subcommand(1);

  std::string config_path, preset_flag, ablate;
  uint64_t seed = 0;
  int beam_width = 0, gl_iters = 0;
  auto add_shared = [&](CLI::App *sub) {
    sub->add_option("--config", config_path, "JSON run configuration file");
    sub->add_option("--preset", preset_flag,
                    "configuration preset: paper or desk");
    sub->add_option("--seed", seed, "master random seed");
    sub->add_option("--beam-width", beam_width,
                    "recognition beam width");
    sub->add_option("--ablate", ablate,
                    "comma-separated switches: no_adv,no_ct,no_text,"
                    "no_pretrain");
    sub->add_option("--griffin-lim-iters", gl_iters,
                    "Griffin-Lim iteration count");
  };

  std::string toy_out;
  int toy_speakers = 0, toy_utts = 0, toy_inventory = 0;
  double toy_noise = 0.0;
  CLI::App *s_toy =
      app.add_subcommand("make-toy-corpus", "generate a synthetic corpus");
  s_toy->add_option("--out", toy_out, "output directory")->required();
  s_toy->add_option("--speakers", toy_speakers, "speaker count");
  s_toy->add_option("--utts", toy_utts, "utterances per speaker");
  s_toy->add_option("--inventory", toy_inventory,
                    "phoneme inventory size (with the end symbol)");
  s_toy->add_option("--noise", toy_noise, "template noise level");
  add_shared(s_toy);

  std::string pre_manifest, pre_out;
  CLI::App *s_pre = app.add_subcommand(
      "preprocess", "extract features for a manifest into a cache");
  s_pre->add_option("--manifest", pre_manifest, "input manifest")->required();
  s_pre->add_option("--out", pre_out, "cache directory")->required();
  add_shared(s_pre);

  std::string pt_corpus, pt_out;
  bool pt_resume = false;
  CLI::App *s_pt =
      app.add_subcommand("pretrain", "alternating multi-speaker pre-training");
  s_pt->add_option("--corpus", pt_corpus, "corpus directory or manifest")
      ->required();
  s_pt->add_option("--out", pt_out, "run directory")->required();
  s_pt->add_flag("--resume", pt_resume, "continue from the last checkpoint");
  add_shared(s_pt);

  std::string ft_corpus, ft_init, ft_out;
  bool ft_resume = false;
  CLI::App *s_ft = app.add_subcommand(
      "finetune", "fine-tune a pre-trained model on a two-speaker pair");
  s_ft->add_option("--corpus", ft_corpus, "pair corpus directory or manifest")
      ->required();
  s_ft->add_option("--init", ft_init, "pre-trained checkpoint");
  s_ft->add_option("--out", ft_out, "run directory")->required();
  s_ft->add_flag("--resume", ft_resume, "continue from the last checkpoint");
  add_shared(s_ft);

  std::string cv_ckpt, cv_target, cv_in, cv_corpus, cv_out;
  bool cv_wav = false;
  int cv_limit = 0;
  CLI::App *s_cv = app.add_subcommand(
      "convert", "convert utterances to a target speaker's voice");
  s_cv->add_option("--ckpt", cv_ckpt, "fine-tuned checkpoint")->required();
  s_cv->add_option("--target", cv_target, "target speaker name")->required();
  s_cv->add_option("--in", cv_in, "one source wav or feature file");
  s_cv->add_option("--corpus", cv_corpus, "source corpus directory");
  s_cv->add_option("--out", cv_out, "output directory")->required();
  s_cv->add_flag("--wav", cv_wav, "also write Griffin-Lim waveforms");
  s_cv->add_option("--limit", cv_limit, "convert only the first N utterances");
  add_shared(s_cv);

  std::string ev_conv, ev_ref, ev_out;
  CLI::App *s_ev = app.add_subcommand(
      "evaluate", "objective metrics between converted and reference sets");
  s_ev->add_option("--converted", ev_conv, "converted corpus or manifest")
      ->required();
  s_ev->add_option("--reference", ev_ref, "reference corpus or manifest")
      ->required();
  s_ev->add_option("--out", ev_out, "report directory")->required();
  add_shared(s_ev);

  std::string vz_ckpt, vz_corpus, vz_out, vz_method = "tsne";
  int vz_max_points = 200;
  CLI::App *s_vz = app.add_subcommand(
      "visualize", "2-D projections of speaker and linguistic embeddings");
  s_vz->add_option("--ckpt", vz_ckpt, "model checkpoint")->required();
  s_vz->add_option("--corpus", vz_corpus, "corpus directory or manifest")
      ->required();
  s_vz->add_option("--out", vz_out, "plot directory")->required();
  s_vz->add_option("--method", vz_method, "projection: tsne or pca");
  s_vz->add_option("--max-points", vz_max_points, "projection point budget");
  add_shared(s_vz);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e, out, err);
    if (code != 0) err << app.help();
    return code;
  }
  CLI::App *sub = app.get_subcommands().front();

  std::vector<std::string> errors;
  RunConfig cfg = LoadEffectiveConfig(config_path, preset_flag, &errors);
  if (sub->count("--seed")) cfg.seed = seed;
  if (sub->count("--beam-width")) cfg.beam_width = beam_width;
  if (sub->count("--griffin-lim-iters"))
    cfg.audio.griffin_lim_iters = gl_iters;
  if (sub->count("--ablate")) cfg.ablations = SplitCommas(ablate);
  if (s_toy->parsed()) {
    if (s_toy->count("--speakers")) cfg.synth.n_speakers = toy_speakers;
    if (s_toy->count("--utts")) cfg.synth.n_utts = toy_utts;
    if (s_toy->count("--inventory"))
      cfg.synth.inventory_size = toy_inventory;
    if (s_toy->count("--noise")) cfg.synth.noise = toy_noise;
  }
  std::vector<std::string> more = ValidateConfig(cfg);
  errors.insert(errors.end(), more.begin(), more.end());
  if (!errors.empty()) {
    err << "invalid configuration:\n";
    for (const std::string &e : errors) err << "  " << e << "\n";
    return 2;
  }

  try {
    std::string summary;
    if (s_toy->parsed()) {
      summary = CmdMakeToy(cfg, toy_out);
    } else if (s_pre->parsed()) {
      summary = CmdPreprocess(cfg, pre_manifest, pre_out);
    } else if (s_pt->parsed()) {
      summary = CmdPretrain(cfg, pt_corpus, pt_out, pt_resume);
    } else if (s_ft->parsed()) {
      summary = CmdFinetune(cfg, ft_corpus, ft_init, ft_out, ft_resume);
    } else if (s_cv->parsed()) {
      summary = CmdConvert(cfg, cv_ckpt, cv_target, cv_in, cv_corpus, cv_out,
                           cv_wav, cv_limit);
    } else if (s_ev->parsed()) {
      summary = CmdEvaluate(cfg, ev_conv, ev_ref, ev_out);
    } else {
      summary = CmdVisualize(cfg, vz_ckpt, vz_corpus, vz_out, vz_method,
                             vz_max_points);
    }
    out << summary << "\n";
    return 0;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cli
}  // namespace vc
