// vc/base/rng.h

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

#ifndef VC_BASE_RNG_H_
#define VC_BASE_RNG_H_

#include <cstdint>
#include <random>

#include "vc/base/common.h"

namespace vc {

// All randomness in the pipeline is derived from (seed, stream, index) keys
// so that any stage can be replayed without serializing engine state.
inline uint64_t MixKey(uint64_t a, uint64_t b) {
  // splitmix64 finalizer over the combined key.
  uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 MakeRng(uint64_t seed, uint64_t stream, uint64_t index = 0) {
  return std::mt19937_64(MixKey(MixKey(seed, stream), index));
}

// Named sub-streams keep RNG consumers independent of each other.
enum RngStream : uint64_t {
  kStreamInit = 1,
  kStreamShuffle = 2,
  kStreamDropout = 3,
  kStreamSynth = 4,
  kStreamTest = 99,
};

template <typename S>
Mat<S> RandomUniform(std::mt19937_64 &rng, int rows, int cols, S lo, S hi) {
  std::uniform_real_distribution<double> dist(static_cast<double>(lo),
                                              static_cast<double>(hi));
  Mat<S> m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = static_cast<S>(dist(rng));
  return m;
}

template <typename S>
Mat<S> RandomNormal(std::mt19937_64 &rng, int rows, int cols, S stddev) {
  std::normal_distribution<double> dist(0.0, static_cast<double>(stddev));
  Mat<S> m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = static_cast<S>(dist(rng));
  return m;
}

}  // namespace vc

#endif  // VC_BASE_RNG_H_
