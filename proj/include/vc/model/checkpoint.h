// vc/model/checkpoint.h

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

#ifndef VC_MODEL_CHECKPOINT_H_
#define VC_MODEL_CHECKPOINT_H_

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vc/base/io.h"
#include "vc/model/model.h"

namespace vc {
namespace model {

inline void ConfigToJson(const ModelConfig &c, nlohmann::json *j) {
  nlohmann::json &o = *j;
  o["n_mels"] = c.n_mels;
  o["inventory"] = c.inventory;
  o["n_speakers"] = c.n_speakers;
  o["te_conv_ch"] = c.te_conv_ch;
  o["te_conv_k"] = c.te_conv_k;
  o["te_blstm"] = c.te_blstm;
  o["te_out"] = c.te_out;
  o["re_blstm"] = c.re_blstm;
  o["re_dec"] = c.re_dec;
  o["re_embed"] = c.re_embed;
  o["re_out"] = c.re_out;
  o["re_attn"] = c.re_attn;
  o["re_loc_kernel"] = c.re_loc_kernel;
  o["re_loc_ch"] = c.re_loc_ch;
  o["rec_cap_mult"] = c.rec_cap_mult;
  o["se_blstm"] = c.se_blstm;
  o["se_out"] = c.se_out;
  o["cs_hidden"] = c.cs_hidden;
  o["da_enc_blstm"] = c.da_enc_blstm;
  o["da_prenet"] = c.da_prenet;
  o["da_lstm"] = c.da_lstm;
  o["da_postnet_ch"] = c.da_postnet_ch;
  o["da_postnet_k"] = c.da_postnet_k;
  o["da_attn"] = c.da_attn;
  o["da_loc_kernel"] = c.da_loc_kernel;
  o["da_loc_ch"] = c.da_loc_ch;
  o["reduction"] = c.reduction;
  o["dropout"] = c.dropout;
  o["leaky_slope"] = c.leaky_slope;
  o["stop_threshold"] = c.stop_threshold;
  o["free_run_cap_mult"] = c.free_run_cap_mult;
  o["dual_rc"] = c.dual_rc;
  o["ct_mean"] = c.ct_mean;
}

inline void ConfigFromJson(const nlohmann::json &o, ModelConfig *c) {
  c->n_mels = o.at("n_mels");
  c->inventory = o.at("inventory");
  c->n_speakers = o.at("n_speakers");
  c->te_conv_ch = o.at("te_conv_ch");
  c->te_conv_k = o.at("te_conv_k");
  c->te_blstm = o.at("te_blstm");
  c->te_out = o.at("te_out");
  c->re_blstm = o.at("re_blstm");
  c->re_dec = o.at("re_dec");
  c->re_embed = o.at("re_embed");
  c->re_out = o.at("re_out");
  c->re_attn = o.at("re_attn");
  c->re_loc_kernel = o.at("re_loc_kernel");
  c->re_loc_ch = o.at("re_loc_ch");
  c->rec_cap_mult = o.at("rec_cap_mult");
  c->se_blstm = o.at("se_blstm");
  c->se_out = o.at("se_out");
  c->cs_hidden = o.at("cs_hidden");
  c->da_enc_blstm = o.at("da_enc_blstm");
  c->da_prenet = o.at("da_prenet");
  c->da_lstm = o.at("da_lstm");
  c->da_postnet_ch = o.at("da_postnet_ch");
  c->da_postnet_k = o.at("da_postnet_k");
  c->da_attn = o.at("da_attn");
  c->da_loc_kernel = o.at("da_loc_kernel");
  c->da_loc_ch = o.at("da_loc_ch");
  c->reduction = o.at("reduction");
  c->dropout = o.at("dropout");
  c->leaky_slope = o.at("leaky_slope");
  c->stop_threshold = o.at("stop_threshold");
  c->free_run_cap_mult = o.at("free_run_cap_mult");
  c->dual_rc = o.at("dual_rc");
  c->ct_mean = o.at("ct_mean");
}

// Per-speaker embeddings learned during fine-tuning; empty before that stage.
template <typename S>
struct FinetuneBlob {
  std::vector<std::string> speakers;
  Mat<S> embed;  // speakers x se_out, stored unnormalized
};

template <typename S>
inline void SaveModel(const std::string &path, const Model<S> &model,
                      const FinetuneBlob<S> *ft = nullptr) {
  std::ofstream os(path, std::ios::binary);
  VC_CHECK(os.good(), "cannot open " + path + " for writing");
  WriteString(os, "VCKP");
  WriteU32(os, 2);
  nlohmann::json j;
  ConfigToJson(model.cfg, &j);
  j["binary_cs"] = model.cs.binary();
  WriteString(os, j.dump());
  WriteU32(os, static_cast<uint32_t>(model.inventory_names.size()));
  for (const auto &s : model.inventory_names) WriteString(os, s);
  WriteU32(os, static_cast<uint32_t>(model.speaker_names.size()));
  for (const auto &s : model.speaker_names) WriteString(os, s);
  const ParamStore<S> *stores[] = {&model.et.params(), &model.er.params(),
                                   &model.es.params(), &model.cs.params(),
                                   &model.da.params()};
  WriteU32(os, 5);
  for (const ParamStore<S> *st : stores) {
    WriteU32(os, static_cast<uint32_t>(st->tensors().size()));
    for (const auto &tn : st->tensors()) {
      WriteString(os, tn->name);
      Matf m = tn->value.template cast<float>();
      WriteMat(os, m);
    }
  }
  WriteU32(os, ft != nullptr ? 1 : 0);
  if (ft != nullptr) {
    WriteU32(os, static_cast<uint32_t>(ft->speakers.size()));
    for (const auto &s : ft->speakers) WriteString(os, s);
    Matf m = ft->embed.template cast<float>();
    WriteMat(os, m);
  }
  VC_CHECK(os.good(), "write failed for " + path);
}

template <typename S>
inline void LoadModel(const std::string &path, Model<S> *model,
                      FinetuneBlob<S> *ft = nullptr) {
  std::ifstream is(path, std::ios::binary);
  VC_CHECK(is.good(), "cannot open " + path);
  VC_CHECK(ReadString(is) == "VCKP", "bad checkpoint magic in " + path);
  uint32_t version = ReadU32(is);
  VC_CHECK(version == 2, "unsupported checkpoint version");
  nlohmann::json j = nlohmann::json::parse(ReadString(is));
  ModelConfig cfg;
  ConfigFromJson(j, &cfg);
  model->Build(cfg, 0);
  if (j.at("binary_cs").template get<bool>()) {
    std::mt19937_64 rng = MakeRng(0, kStreamInit, 99);
    model->cs.ResetBinaryHead(&rng);
  }
  uint32_t n_inv = ReadU32(is);
  model->inventory_names.resize(n_inv);
  for (auto &s : model->inventory_names) s = ReadString(is);
  uint32_t n_spk = ReadU32(is);
  model->speaker_names.resize(n_spk);
  for (auto &s : model->speaker_names) s = ReadString(is);
  VC_CHECK(ReadU32(is) == 5, "unexpected store count");
  std::vector<ParamStore<S> *> stores = model->Stores();
  for (ParamStore<S> *st : stores) {
    uint32_t n = ReadU32(is);
    VC_CHECK(n == st->tensors().size(), "tensor count mismatch in " + path);
    for (auto &tn : st->tensors()) {
      std::string name = ReadString(is);
      VC_CHECK(name == tn->name, "tensor order mismatch: " + name);
      Matf m = ReadMat(is);
      VC_CHECK(m.rows() == tn->value.rows() && m.cols() == tn->value.cols(),
               "tensor shape mismatch: " + name);
      tn->value = m.template cast<S>();
    }
  }
  uint32_t has_ft = ReadU32(is);
  if (has_ft == 1) {
    FinetuneBlob<S> blob;
    uint32_t n = ReadU32(is);
    blob.speakers.resize(n);
    for (auto &s : blob.speakers) s = ReadString(is);
    blob.embed = ReadMat(is).template cast<S>();
    if (ft != nullptr) *ft = std::move(blob);
  } else if (ft != nullptr) {
    ft->speakers.clear();
    ft->embed = Mat<S>();
  }
}

}  // namespace model
}  // namespace vc

#endif  // VC_MODEL_CHECKPOINT_H_
