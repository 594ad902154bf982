// Copyright (c) the wavefr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WAVEFR_RNG_HPP_
#define WAVEFR_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace wfr {

// Deterministic random stream identified by (seed, stream id).
//
// The engine is std::mt19937_64 seeded through std::seed_seq with the four
// 32-bit halves of seed and stream id; both are fully specified by the C++
// standard, so the raw 64-bit sequence is identical on every conforming
// platform. Conversions to uniform and normal variates are done here rather
// than through <random> distributions, whose algorithms are
// implementation-defined.
//
//   uniform()  = (next_u64() >> 11) * 2^-53             in [0, 1)
//   normal()   = Box-Muller on two uniforms, both outputs used in order
//
// normal() goes through libm log/sqrt/cos, so its last bits may differ
// between math libraries; within one build it is bit-reproducible.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi] (inclusive), unbiased by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();

  // Independent child stream seeded from the next two draws.
  RngStream split();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream id for (purpose, index): FNV-1a of the purpose tag, combined with the
// index through a splitmix64 finalizer. Every random draw in the pipeline goes
// through a stream built as RngStream(global_seed, stream_id(tag, i)), so the
// results do not depend on processing order or thread count.
std::uint64_t stream_id(std::string_view purpose, std::uint64_t index);

}  // namespace wfr

#endif  // WAVEFR_RNG_HPP_
