// src/cli/config.cc

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

#include "vc/cli/config.h"

#include <cmath>
#include <fstream>
#include <set>
#include <string>

namespace vc {
namespace cli {

using nlohmann::json;

namespace {

const std::set<std::string> kAblationNames = {"no_adv", "no_ct", "no_text",
                                              "no_pretrain"};

void CheckKeys(const json &o, const std::string &prefix,
               const std::set<std::string> &allowed,
               std::vector<std::string> *errors) {
  for (auto it = o.begin(); it != o.end(); ++it)
    if (!allowed.count(it.key()))
      errors->push_back("unknown config key: " + prefix + it.key());
}

template <typename T>
void GetField(const json &o, const std::string &prefix, const char *key,
              T *dst, std::vector<std::string> *errors) {
  if (!o.contains(key)) return;
  try {
    *dst = o.at(key).get<T>();
  } catch (const json::exception &) {
    errors->push_back(prefix + std::string(key) + ": wrong value type");
  }
}

const json *GetSection(const json &o, const std::string &name,
                       std::vector<std::string> *errors) {
  if (!o.contains(name)) return nullptr;
  const json &s = o.at(name);
  if (!s.is_object()) {
    errors->push_back(name + ": expected an object");
    return nullptr;
  }
  return &s;
}

void ApplyAudio(const json &o, dsp::AudioConfig *a,
                std::vector<std::string> *errors) {
  static const std::set<std::string> keys = {
      "sample_rate", "hop",       "win",       "nfft",   "n_mels",
      "fmin",        "fmax",      "mel_floor", "trim_db", "griffin_lim_iters"};
  CheckKeys(o, "audio.", keys, errors);
  GetField(o, "audio.", "sample_rate", &a->sample_rate, errors);
  GetField(o, "audio.", "hop", &a->hop, errors);
  GetField(o, "audio.", "win", &a->win, errors);
  GetField(o, "audio.", "nfft", &a->nfft, errors);
  GetField(o, "audio.", "n_mels", &a->n_mels, errors);
  GetField(o, "audio.", "fmin", &a->fmin, errors);
  GetField(o, "audio.", "fmax", &a->fmax, errors);
  GetField(o, "audio.", "mel_floor", &a->mel_floor, errors);
  GetField(o, "audio.", "trim_db", &a->trim_db, errors);
  GetField(o, "audio.", "griffin_lim_iters", &a->griffin_lim_iters, errors);
}

void ApplyModel(const json &o, model::ModelConfig *m,
                std::vector<std::string> *errors) {
  static const std::set<std::string> keys = {
      "n_mels",        "te_conv_ch",    "te_conv_k",     "te_blstm",
      "te_out",        "re_blstm",      "re_dec",        "re_embed",
      "re_out",        "re_attn",       "re_loc_kernel", "re_loc_ch",
      "rec_cap_mult",  "se_blstm",      "se_out",        "cs_hidden",
      "da_enc_blstm",  "da_prenet",     "da_lstm",       "da_postnet_ch",
      "da_postnet_k",  "da_attn",       "da_loc_kernel", "da_loc_ch",
      "reduction",     "dropout",       "leaky_slope",   "stop_threshold",
      "free_run_cap_mult", "dual_rc",   "ct_mean"};
  CheckKeys(o, "model.", keys, errors);
  GetField(o, "model.", "n_mels", &m->n_mels, errors);
  GetField(o, "model.", "te_conv_ch", &m->te_conv_ch, errors);
  GetField(o, "model.", "te_conv_k", &m->te_conv_k, errors);
  GetField(o, "model.", "te_blstm", &m->te_blstm, errors);
  GetField(o, "model.", "te_out", &m->te_out, errors);
  GetField(o, "model.", "re_blstm", &m->re_blstm, errors);
  GetField(o, "model.", "re_dec", &m->re_dec, errors);
  GetField(o, "model.", "re_embed", &m->re_embed, errors);
  GetField(o, "model.", "re_out", &m->re_out, errors);
  GetField(o, "model.", "re_attn", &m->re_attn, errors);
  GetField(o, "model.", "re_loc_kernel", &m->re_loc_kernel, errors);
  GetField(o, "model.", "re_loc_ch", &m->re_loc_ch, errors);
  GetField(o, "model.", "rec_cap_mult", &m->rec_cap_mult, errors);
  GetField(o, "model.", "se_blstm", &m->se_blstm, errors);
  GetField(o, "model.", "se_out", &m->se_out, errors);
  GetField(o, "model.", "cs_hidden", &m->cs_hidden, errors);
  GetField(o, "model.", "da_enc_blstm", &m->da_enc_blstm, errors);
  GetField(o, "model.", "da_prenet", &m->da_prenet, errors);
  GetField(o, "model.", "da_lstm", &m->da_lstm, errors);
  GetField(o, "model.", "da_postnet_ch", &m->da_postnet_ch, errors);
  GetField(o, "model.", "da_postnet_k", &m->da_postnet_k, errors);
  GetField(o, "model.", "da_attn", &m->da_attn, errors);
  GetField(o, "model.", "da_loc_kernel", &m->da_loc_kernel, errors);
  GetField(o, "model.", "da_loc_ch", &m->da_loc_ch, errors);
  GetField(o, "model.", "reduction", &m->reduction, errors);
  GetField(o, "model.", "dropout", &m->dropout, errors);
  GetField(o, "model.", "leaky_slope", &m->leaky_slope, errors);
  GetField(o, "model.", "stop_threshold", &m->stop_threshold, errors);
  GetField(o, "model.", "free_run_cap_mult", &m->free_run_cap_mult, errors);
  GetField(o, "model.", "dual_rc", &m->dual_rc, errors);
  GetField(o, "model.", "ct_mean", &m->ct_mean, errors);
}

void ApplyTrain(const json &o, const std::string &prefix,
                train::TrainConfig *t, std::vector<std::string> *errors) {
  static const std::set<std::string> keys = {
      "batch_size", "lr",        "halve_lr",     "halve_every", "epochs",
      "clip_norm",  "val_fraction", "weights"};
  CheckKeys(o, prefix, keys, errors);
  GetField(o, prefix, "batch_size", &t->batch_size, errors);
  GetField(o, prefix, "lr", &t->lr, errors);
  GetField(o, prefix, "halve_lr", &t->halve_lr, errors);
  GetField(o, prefix, "halve_every", &t->halve_every, errors);
  GetField(o, prefix, "epochs", &t->epochs, errors);
  GetField(o, prefix, "clip_norm", &t->clip_norm, errors);
  GetField(o, prefix, "val_fraction", &t->val_fraction, errors);
  if (o.contains("weights")) {
    const json &w = o.at("weights");
    if (!w.is_object()) {
      errors->push_back(prefix + "weights: expected an object");
      return;
    }
    std::string wp = prefix + "weights.";
    CheckKeys(w, wp, {"w_ct", "w_sc", "w_adv"}, errors);
    GetField(w, wp, "w_ct", &t->weights.w_ct, errors);
    GetField(w, wp, "w_sc", &t->weights.w_sc, errors);
    GetField(w, wp, "w_adv", &t->weights.w_adv, errors);
  }
}

void ApplySynth(const json &o, corpus::SynthSpec *s,
                std::vector<std::string> *errors) {
  static const std::set<std::string> keys = {"n_speakers", "n_utts",
                                             "inventory_size", "noise"};
  CheckKeys(o, "synth.", keys, errors);
  GetField(o, "synth.", "n_speakers", &s->n_speakers, errors);
  GetField(o, "synth.", "n_utts", &s->n_utts, errors);
  GetField(o, "synth.", "inventory_size", &s->inventory_size, errors);
  GetField(o, "synth.", "noise", &s->noise, errors);
}

json AudioJson(const dsp::AudioConfig &a) {
  return {{"sample_rate", a.sample_rate},
          {"hop", a.hop},
          {"win", a.win},
          {"nfft", a.nfft},
          {"n_mels", a.n_mels},
          {"fmin", a.fmin},
          {"fmax", a.fmax},
          {"mel_floor", a.mel_floor},
          {"trim_db", a.trim_db},
          {"griffin_lim_iters", a.griffin_lim_iters}};
}

json ModelJson(const model::ModelConfig &m) {
  return {{"n_mels", m.n_mels},
          {"te_conv_ch", m.te_conv_ch},
          {"te_conv_k", m.te_conv_k},
          {"te_blstm", m.te_blstm},
          {"te_out", m.te_out},
          {"re_blstm", m.re_blstm},
          {"re_dec", m.re_dec},
          {"re_embed", m.re_embed},
          {"re_out", m.re_out},
          {"re_attn", m.re_attn},
          {"re_loc_kernel", m.re_loc_kernel},
          {"re_loc_ch", m.re_loc_ch},
          {"rec_cap_mult", m.rec_cap_mult},
          {"se_blstm", m.se_blstm},
          {"se_out", m.se_out},
          {"cs_hidden", m.cs_hidden},
          {"da_enc_blstm", m.da_enc_blstm},
          {"da_prenet", m.da_prenet},
          {"da_lstm", m.da_lstm},
          {"da_postnet_ch", m.da_postnet_ch},
          {"da_postnet_k", m.da_postnet_k},
          {"da_attn", m.da_attn},
          {"da_loc_kernel", m.da_loc_kernel},
          {"da_loc_ch", m.da_loc_ch},
          {"reduction", m.reduction},
          {"dropout", m.dropout},
          {"leaky_slope", m.leaky_slope},
          {"stop_threshold", m.stop_threshold},
          {"free_run_cap_mult", m.free_run_cap_mult},
          {"dual_rc", m.dual_rc},
          {"ct_mean", m.ct_mean}};
}

json TrainJson(const train::TrainConfig &t) {
  return {{"batch_size", t.batch_size},
          {"lr", t.lr},
          {"halve_lr", t.halve_lr},
          {"halve_every", t.halve_every},
          {"epochs", t.epochs},
          {"clip_norm", t.clip_norm},
          {"val_fraction", t.val_fraction},
          {"weights",
           {{"w_ct", t.weights.w_ct},
            {"w_sc", t.weights.w_sc},
            {"w_adv", t.weights.w_adv}}}};
}

json SynthJson(const corpus::SynthSpec &s) {
  return {{"n_speakers", s.n_speakers},
          {"n_utts", s.n_utts},
          {"inventory_size", s.inventory_size},
          {"noise", s.noise}};
}

bool PowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

void CheckPos(int v, const char *field, std::vector<std::string> *errors) {
  if (v < 1)
    errors->push_back(std::string(field) + ": must be a positive integer");
}

void CheckOdd(int v, const char *field, std::vector<std::string> *errors) {
  if (v % 2 != 1)
    errors->push_back(std::string(field) + ": kernel size must be odd");
}

void ValidateTrain(const train::TrainConfig &t, const std::string &prefix,
                   std::vector<std::string> *errors) {
  auto f = [&](const char *k) { return prefix + k; };
  if (t.batch_size < 1)
    errors->push_back(f("batch_size") + ": must be a positive integer");
  if (!(t.lr > 0)) errors->push_back(f("lr") + ": must be positive");
  if (t.halve_every < 1)
    errors->push_back(f("halve_every") + ": must be a positive integer");
  if (t.epochs < 1)
    errors->push_back(f("epochs") + ": must be a positive integer");
  if (!(t.val_fraction >= 0 && t.val_fraction < 1))
    errors->push_back(f("val_fraction") + ": must lie in [0, 1)");
  if (!(t.weights.w_ct >= 0))
    errors->push_back(f("weights.w_ct") + ": must be >= 0");
  if (!(t.weights.w_sc >= 0))
    errors->push_back(f("weights.w_sc") + ": must be >= 0");
  if (!(t.weights.w_adv >= 0))
    errors->push_back(f("weights.w_adv") + ": must be >= 0");
}

}  // namespace

RunConfig PresetConfig(const std::string &preset) {
  VC_CHECK(preset == "paper" || preset == "desk",
           "unknown preset " + preset);
  RunConfig c;
  c.preset = preset;
  c.pretrain = train::TrainConfig::Pretrain();
  c.finetune = train::TrainConfig::Finetune();
  if (preset == "paper") {
    c.model = model::ModelConfig::Paper(0, 0);
  } else {
    c.model = model::ModelConfig::Desk(0, 0);
    c.pretrain.batch_size = 8;
    c.pretrain.epochs = 60;
    c.finetune.epochs = 20;
  }
  return c;
}

void RunConfigToJson(const RunConfig &c, json *j) {
  json &o = *j;
  o["preset"] = c.preset;
  o["seed"] = c.seed;
  o["beam_width"] = c.beam_width;
  o["audio"] = AudioJson(c.audio);
  o["model"] = ModelJson(c.model);
  o["pretrain"] = TrainJson(c.pretrain);
  o["finetune"] = TrainJson(c.finetune);
  o["synth"] = SynthJson(c.synth);
  o["ablations"] = c.ablations;
}

void ApplyConfigJson(const json &j, RunConfig *c,
                     std::vector<std::string> *errors) {
  static const std::set<std::string> keys = {
      "preset", "seed",  "beam_width", "audio",     "model", "pretrain",
      "finetune", "synth", "ablations", "command", "inputs"};
  CheckKeys(j, "", keys, errors);
  GetField(j, "", "seed", &c->seed, errors);
  GetField(j, "", "beam_width", &c->beam_width, errors);
  if (const json *s = GetSection(j, "audio", errors))
    ApplyAudio(*s, &c->audio, errors);
  if (const json *s = GetSection(j, "model", errors))
    ApplyModel(*s, &c->model, errors);
  if (const json *s = GetSection(j, "pretrain", errors))
    ApplyTrain(*s, "pretrain.", &c->pretrain, errors);
  if (const json *s = GetSection(j, "finetune", errors))
    ApplyTrain(*s, "finetune.", &c->finetune, errors);
  if (const json *s = GetSection(j, "synth", errors))
    ApplySynth(*s, &c->synth, errors);
  GetField(j, "", "ablations", &c->ablations, errors);
}

std::vector<std::string> ValidateConfig(const RunConfig &c) {
  std::vector<std::string> errors;
  if (c.preset != "paper" && c.preset != "desk")
    errors.push_back("preset: must be \"paper\" or \"desk\"");
  if (c.beam_width < 1)
    errors.push_back("beam_width: must be a positive integer");

  const dsp::AudioConfig &a = c.audio;
  if (a.sample_rate < 16000)
    errors.push_back("audio.sample_rate: must be at least 16000");
  CheckPos(a.hop, "audio.hop", &errors);
  if (a.win < a.hop)
    errors.push_back("audio.win: must be at least audio.hop");
  if (!PowerOfTwo(a.nfft))
    errors.push_back("audio.nfft: must be a power of two");
  if (a.nfft < a.win)
    errors.push_back("audio.nfft: must be at least audio.win");
  CheckPos(a.n_mels, "audio.n_mels", &errors);
  if (!(a.fmin >= 0)) errors.push_back("audio.fmin: must be >= 0");
  if (!(a.fmax > a.fmin))
    errors.push_back("audio.fmax: must exceed audio.fmin");
  if (a.fmax > a.sample_rate / 2.0)
    errors.push_back("audio.fmax: must not exceed half the sample rate");
  if (!(a.mel_floor > 0))
    errors.push_back("audio.mel_floor: must be positive");
  if (!(a.trim_db > 0)) errors.push_back("audio.trim_db: must be positive");
  CheckPos(a.griffin_lim_iters, "audio.griffin_lim_iters", &errors);

  const model::ModelConfig &m = c.model;
  if (m.n_mels != a.n_mels)
    errors.push_back("model.n_mels: must equal audio.n_mels");
  CheckPos(m.n_mels, "model.n_mels", &errors);
  CheckPos(m.te_conv_ch, "model.te_conv_ch", &errors);
  CheckPos(m.te_conv_k, "model.te_conv_k", &errors);
  CheckOdd(m.te_conv_k, "model.te_conv_k", &errors);
  CheckPos(m.te_blstm, "model.te_blstm", &errors);
  CheckPos(m.te_out, "model.te_out", &errors);
  CheckPos(m.re_blstm, "model.re_blstm", &errors);
  CheckPos(m.re_dec, "model.re_dec", &errors);
  CheckPos(m.re_embed, "model.re_embed", &errors);
  CheckPos(m.re_out, "model.re_out", &errors);
  if (m.re_out != m.te_out)
    errors.push_back("model.re_out: must equal model.te_out");
  CheckPos(m.re_attn, "model.re_attn", &errors);
  CheckPos(m.re_loc_kernel, "model.re_loc_kernel", &errors);
  CheckOdd(m.re_loc_kernel, "model.re_loc_kernel", &errors);
  CheckPos(m.re_loc_ch, "model.re_loc_ch", &errors);
  CheckPos(m.rec_cap_mult, "model.rec_cap_mult", &errors);
  CheckPos(m.se_blstm, "model.se_blstm", &errors);
  CheckPos(m.se_out, "model.se_out", &errors);
  CheckPos(m.cs_hidden, "model.cs_hidden", &errors);
  CheckPos(m.da_enc_blstm, "model.da_enc_blstm", &errors);
  CheckPos(m.da_prenet, "model.da_prenet", &errors);
  CheckPos(m.da_lstm, "model.da_lstm", &errors);
  CheckPos(m.da_postnet_ch, "model.da_postnet_ch", &errors);
  CheckPos(m.da_postnet_k, "model.da_postnet_k", &errors);
  CheckOdd(m.da_postnet_k, "model.da_postnet_k", &errors);
  CheckPos(m.da_attn, "model.da_attn", &errors);
  CheckPos(m.da_loc_kernel, "model.da_loc_kernel", &errors);
  CheckOdd(m.da_loc_kernel, "model.da_loc_kernel", &errors);
  CheckPos(m.da_loc_ch, "model.da_loc_ch", &errors);
  CheckPos(m.reduction, "model.reduction", &errors);
  if (!(m.dropout >= 0 && m.dropout < 1))
    errors.push_back("model.dropout: must lie in [0, 1)");
  if (!(m.leaky_slope > 0 && m.leaky_slope < 1))
    errors.push_back("model.leaky_slope: must lie in (0, 1)");
  if (!(m.stop_threshold > 0))
    errors.push_back("model.stop_threshold: must be positive");
  CheckPos(m.free_run_cap_mult, "model.free_run_cap_mult", &errors);

  ValidateTrain(c.pretrain, "pretrain.", &errors);
  ValidateTrain(c.finetune, "finetune.", &errors);

  const corpus::SynthSpec &s = c.synth;
  if (s.n_speakers < 2)
    errors.push_back("synth.n_speakers: must be at least 2");
  CheckPos(s.n_utts, "synth.n_utts", &errors);
  if (s.inventory_size < 4)
    errors.push_back("synth.inventory_size: must be at least 4");
  if (!(s.noise >= 0)) errors.push_back("synth.noise: must be >= 0");

  for (const std::string &name : c.ablations)
    if (!kAblationNames.count(name))
      errors.push_back("ablations: unknown switch \"" + name + "\"");
  return errors;
}

void ApplyAblations(const std::vector<std::string> &ablations,
                    train::TrainConfig *t) {
  for (const std::string &name : ablations) {
    if (name == "no_adv") t->no_adv = true;
    else if (name == "no_ct") t->no_ct = true;
    else if (name == "no_text") t->no_text = true;
    else if (name == "no_pretrain") t->no_pretrain = true;
    else VC_ERROR("unknown ablation " << name);
  }
}

RunConfig LoadEffectiveConfig(const std::string &config_path,
                              const std::string &preset_flag,
                              std::vector<std::string> *errors) {
  json file = json::object();
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is.good()) {
      errors->push_back("config: cannot open " + config_path);
    } else {
      try {
        is >> file;
      } catch (const json::exception &) {
        errors->push_back("config: " + config_path + " is not valid JSON");
        file = json::object();
      }
      if (!file.is_object()) {
        errors->push_back("config: " + config_path +
                          " must hold a JSON object");
        file = json::object();
      }
    }
  }

  std::string preset = "desk";
  if (file.contains("preset")) {
    if (file.at("preset").is_string())
      preset = file.at("preset").get<std::string>();
    else
      errors->push_back("preset: wrong value type");
  }
  if (!preset_flag.empty()) preset = preset_flag;
  // A bad name still gets desk defaults so later checks can run; validation
  // reports the name itself.
  std::string effective =
      (preset == "paper" || preset == "desk") ? preset : "desk";
  RunConfig c = PresetConfig(effective);
  c.preset = preset;
  ApplyConfigJson(file, &c, errors);
  return c;
}

}  // namespace cli
}  // namespace vc
