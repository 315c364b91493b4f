// src/base/io.cc

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

#include "vc/base/io.h"

#include <cstring>
#include <fstream>
#include <sstream>

namespace vc {

namespace {

template <typename T>
void WriteRaw(std::ostream &os, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(reinterpret_cast<const char *>(buf), sizeof(T));
  VC_CHECK(os.good(), "write failed");
}

template <typename T>
T ReadRaw(std::istream &is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char *>(buf), sizeof(T));
  VC_CHECK(is.good(), "read failed or truncated stream");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

constexpr char kMatMagic[4] = {'V', 'C', 'M', '0'};

}  // namespace

void WriteU32(std::ostream &os, uint32_t v) { WriteRaw(os, v); }
uint32_t ReadU32(std::istream &is) { return ReadRaw<uint32_t>(is); }
void WriteI32(std::ostream &os, int32_t v) { WriteRaw(os, v); }
int32_t ReadI32(std::istream &is) { return ReadRaw<int32_t>(is); }
void WriteU64(std::ostream &os, uint64_t v) { WriteRaw(os, v); }
uint64_t ReadU64(std::istream &is) { return ReadRaw<uint64_t>(is); }
void WriteF32(std::ostream &os, float v) { WriteRaw(os, v); }
float ReadF32(std::istream &is) { return ReadRaw<float>(is); }
void WriteF64(std::ostream &os, double v) { WriteRaw(os, v); }
double ReadF64(std::istream &is) { return ReadRaw<double>(is); }

void WriteString(std::ostream &os, const std::string &s) {
  WriteU32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
  VC_CHECK(os.good(), "write failed");
}

std::string ReadString(std::istream &is) {
  uint32_t n = ReadU32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  VC_CHECK(is.good(), "read failed or truncated stream");
  return s;
}

void WriteMat(std::ostream &os, const Matf &m) {
  os.write(kMatMagic, 4);
  WriteI32(os, static_cast<int32_t>(m.rows()));
  WriteI32(os, static_cast<int32_t>(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) WriteF32(os, m(i, j));
}

Matf ReadMat(std::istream &is) {
  char magic[4];
  is.read(magic, 4);
  VC_CHECK(is.good() && std::memcmp(magic, kMatMagic, 4) == 0,
           "bad matrix magic");
  int32_t rows = ReadI32(is), cols = ReadI32(is);
  VC_CHECK(rows >= 0 && cols >= 0, "bad matrix shape");
  Matf m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = ReadF32(is);
  return m;
}

void SaveMat(const std::string &path, const Matf &m) {
  std::ofstream os(path, std::ios::binary);
  VC_CHECK(os.is_open(), "cannot open for writing: " + path);
  WriteMat(os, m);
}

Matf LoadMat(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  VC_CHECK(is.is_open(), "cannot open: " + path);
  return ReadMat(is);
}

std::vector<float> ReadWav(const std::string &path, int *sample_rate) {
  std::ifstream is(path, std::ios::binary);
  VC_CHECK(is.is_open(), "cannot open: " + path);
  char tag[4];
  is.read(tag, 4);
  VC_CHECK(is.good() && std::memcmp(tag, "RIFF", 4) == 0, "not a RIFF file");
  ReadU32(is);
  is.read(tag, 4);
  VC_CHECK(is.good() && std::memcmp(tag, "WAVE", 4) == 0, "not a WAVE file");
  uint16_t channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<float> samples;
  bool got_fmt = false, got_data = false;
  while (is.read(tag, 4)) {
    uint32_t size = ReadU32(is);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      uint16_t fmt = ReadRaw<uint16_t>(is);
      channels = ReadRaw<uint16_t>(is);
      rate = ReadU32(is);
      ReadU32(is);                // byte rate
      ReadRaw<uint16_t>(is);      // block align
      bits = ReadRaw<uint16_t>(is);
      VC_CHECK(fmt == 1, "only PCM wav supported");
      if (size > 16) is.seekg(size - 16, std::ios::cur);
      got_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      VC_CHECK(got_fmt, "wav data before fmt");
      VC_CHECK(channels == 1, "only mono wav supported");
      VC_CHECK(bits == 16, "only 16-bit wav supported");
      uint32_t n = size / 2;
      samples.resize(n);
      for (uint32_t i = 0; i < n; ++i) {
        int16_t s = static_cast<int16_t>(ReadRaw<uint16_t>(is));
        samples[i] = static_cast<float>(s) / 32768.0f;
      }
      got_data = true;
      break;
    } else {
      is.seekg(size + (size & 1), std::ios::cur);
    }
  }
  VC_CHECK(got_data, "wav has no data chunk");
  if (sample_rate != nullptr) *sample_rate = static_cast<int>(rate);
  return samples;
}

void WriteWav(const std::string &path, const std::vector<float> &samples,
              int sample_rate) {
  std::ofstream os(path, std::ios::binary);
  VC_CHECK(os.is_open(), "cannot open for writing: " + path);
  uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  WriteU32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  WriteU32(os, 16);
  WriteU32(os, 1u | (1u << 16));  // PCM, mono
  WriteU32(os, static_cast<uint32_t>(sample_rate));
  WriteU32(os, static_cast<uint32_t>(sample_rate) * 2);
  WriteU32(os, 2u | (16u << 16));  // block align 2, 16 bits
  os.write("data", 4);
  WriteU32(os, data_bytes);
  for (float s : samples) {
    float c = std::min(1.0f, std::max(-1.0f, s));
    int16_t q = static_cast<int16_t>(std::lround(c * 32767.0f));
    WriteRaw(os, static_cast<uint16_t>(q));
  }
}

std::string ReadTextFile(const std::string &path) {
  std::ifstream is(path);
  VC_CHECK(is.is_open(), "cannot open: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::string &path, const std::string &text) {
  std::ofstream os(path);
  VC_CHECK(os.is_open(), "cannot open for writing: " + path);
  os << text;
  VC_CHECK(os.good(), "write failed: " + path);
}

}  // namespace vc
