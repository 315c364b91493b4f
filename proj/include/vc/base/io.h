// vc/base/io.h

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

#ifndef VC_BASE_IO_H_
#define VC_BASE_IO_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vc/base/common.h"

namespace vc {

// Little-endian primitives.
void WriteU32(std::ostream &os, uint32_t v);
uint32_t ReadU32(std::istream &is);
void WriteI32(std::ostream &os, int32_t v);
int32_t ReadI32(std::istream &is);
void WriteU64(std::ostream &os, uint64_t v);
uint64_t ReadU64(std::istream &is);
void WriteF32(std::ostream &os, float v);
float ReadF32(std::istream &is);
void WriteF64(std::ostream &os, double v);
double ReadF64(std::istream &is);
void WriteString(std::ostream &os, const std::string &s);
std::string ReadString(std::istream &is);

// Matrix container: magic "VCM0", i32 rows, i32 cols, row-major f32 payload.
void WriteMat(std::ostream &os, const Matf &m);
Matf ReadMat(std::istream &is);
void SaveMat(const std::string &path, const Matf &m);
Matf LoadMat(const std::string &path);

// Mono 16-bit PCM WAV.
std::vector<float> ReadWav(const std::string &path, int *sample_rate);
void WriteWav(const std::string &path, const std::vector<float> &samples,
              int sample_rate);

// Whole-file text helpers.
std::string ReadTextFile(const std::string &path);
void WriteTextFile(const std::string &path, const std::string &text);

}  // namespace vc

#endif  // VC_BASE_IO_H_
