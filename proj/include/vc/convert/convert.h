// vc/convert/convert.h

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

#ifndef VC_CONVERT_CONVERT_H_
#define VC_CONVERT_CONVERT_H_

#include <string>
#include <vector>

#include "vc/model/checkpoint.h"
#include "vc/model/model.h"

namespace vc {
namespace convert {

using ad::Tape;

// Conversion never sees text or the source speaker: the input is a mel
// matrix plus a row of the fine-tuned embedding table.

template <typename S>
struct ConvertResult {
  Mat<S> mel;                 // M' x n_mels, length chosen by the decoder
  std::vector<int> phonemes;  // recognition hypothesis, EOS-terminated
  Mat<S> rec_alignment;       // recognition attention, steps x T_mem
  Mat<S> dec_alignment;       // decoder attention, steps x N
  double log_prob = 0.0;      // hypothesis score
  bool rec_truncated = false;  // hypothesis hit the decode cap before EOS
  bool dec_capped = false;     // decoder hit the free-run cap before stopping
};

// Embedding-table row for a speaker name.
template <typename S>
int ResolveSpeaker(const model::FinetuneBlob<S> &blob,
                   const std::string &name) {
  for (size_t i = 0; i < blob.speakers.size(); ++i)
    if (blob.speakers[i] == name) return static_cast<int>(i);
  VC_ERROR("unknown speaker " << name << " in the embedding table");
}

// Fig. 1(b): recognize the source mel into linguistic embeddings with a beam
// search, then free-run the decoder conditioned on the target embedding.
template <typename S>
ConvertResult<S> Convert(const model::Model<S> &m,
                         const model::FinetuneBlob<S> &blob,
                         const Mat<S> &source_mel, int target_row,
                         int beam_width = 10) {
  VC_CHECK(target_row >= 0 &&
               target_row < static_cast<int>(blob.embed.rows()),
           "speaker row out of range");
  VC_CHECK(source_mel.rows() > 0, "empty source mel");
  VC_CHECK(source_mel.cols() == m.cfg.n_mels, "mel bin count mismatch");

  auto hyp = m.er.BeamDecode(source_mel, beam_width);
  VC_CHECK(hyp.hr.rows() > 0, "empty recognition hypothesis");

  Tape<S> t(false);
  Mat<S> h_s = blob.embed.row(target_row);
  S norm = h_s.norm();
  VC_CHECK(norm > S(0), "degenerate speaker embedding");
  h_s /= norm;
  auto fr = m.da.FreeRun(t, t.Constant(hyp.hr),
                         static_cast<int>(hyp.hr.rows()), t.Constant(h_s));

  ConvertResult<S> out;
  out.mel = fr.mel;
  out.phonemes = hyp.phonemes;
  out.rec_alignment = hyp.alignment;
  out.dec_alignment = fr.alignment;
  out.log_prob = hyp.log_prob;
  out.rec_truncated = hyp.truncated;
  out.dec_capped = fr.capped;
  VC_CHECK(out.mel.allFinite(), "non-finite converted mel");
  return out;
}

}  // namespace convert
}  // namespace vc

#endif  // VC_CONVERT_CONVERT_H_
