// vc/cli/commands.h

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

#ifndef VC_CLI_COMMANDS_H_
#define VC_CLI_COMMANDS_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace vc {
namespace cli {

// Entry point behind the vc binary: parses the subcommand and its flags,
// resolves the configuration (preset -> config file -> flags), runs the
// command, and prints one deterministic summary line to out.  Returns the
// process exit code; usage problems print to err.
int RunCli(const std::vector<std::string> &args, std::ostream &out,
           std::ostream &err);

// FNV-1a 64-bit digest of a file's bytes as 16 hex characters; the summary
// lines use it as a checkpoint fingerprint.
std::string FileDigest(const std::string &path);

}  // namespace cli
}  // namespace vc

#endif  // VC_CLI_COMMANDS_H_
