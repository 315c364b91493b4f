// vc/cli/config.h

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

#ifndef VC_CLI_CONFIG_H_
#define VC_CLI_CONFIG_H_

#include <string>
#include <vector>

#include "json.hpp"
#include "vc/corpus/dsp.h"
#include "vc/corpus/synth.h"
#include "vc/model/model.h"
#include "vc/train/train.h"

namespace vc {
namespace cli {

// One hierarchical run configuration shared by every command.  A preset
// ("paper" or "desk") supplies the defaults, the config file overrides
// individual fields, and command-line flags override both.  model.inventory
// and model.n_speakers stay 0 here; they are filled from the corpus.
struct RunConfig {
  std::string preset = "desk";
  uint64_t seed = 1;
  int beam_width = 10;
  dsp::AudioConfig audio;
  model::ModelConfig model;
  train::TrainConfig pretrain;
  train::TrainConfig finetune;
  corpus::SynthSpec synth;
  std::vector<std::string> ablations;
};

// Defaults for a preset name; "paper" keeps the published widths and epoch
// counts, "desk" halves the widths and shortens the schedules.
RunConfig PresetConfig(const std::string &preset);

// Serializes every field, so a frozen copy replays without its preset.
void RunConfigToJson(const RunConfig &c, nlohmann::json *j);

// Applies the fields present in j on top of c.  Unknown or ill-typed keys
// are reported through errors; "preset", "command", and "inputs" are the
// caller's business and skipped here.
void ApplyConfigJson(const nlohmann::json &j, RunConfig *c,
                     std::vector<std::string> *errors);

// Full field validation; returns one message per offending field.
std::vector<std::string> ValidateConfig(const RunConfig &c);

// Copies the ablation switches onto a train config.  Names must have been
// validated already.
void ApplyAblations(const std::vector<std::string> &ablations,
                    train::TrainConfig *t);

// Preset -> config file -> (preset flag) resolution.  The file may be empty;
// parse and schema problems are appended to errors.
RunConfig LoadEffectiveConfig(const std::string &config_path,
                              const std::string &preset_flag,
                              std::vector<std::string> *errors);

}  // namespace cli
}  // namespace vc

#endif  // VC_CLI_CONFIG_H_
