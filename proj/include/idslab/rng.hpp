/**
 * Copyright 2026 The idslab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace idslab {

/// Philox4x32-10 counter-based generator.
///
/// The 128-bit counter is split into a 64-bit stream id (high word) and a
/// 64-bit block position (low word); the 64-bit key is the seed. For a fixed
/// key the Philox round function is a bijection of the counter, so distinct
/// (stream, position) pairs can never produce the same output block. Every
/// sampler in the library draws path k / probe k / realization k from stream
/// k, which makes results independent of scheduling and thread count.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Raw block for a given counter, exposed for tests.
  static std::array<std::uint32_t, 4> block(std::uint64_t seed,
                                            std::uint64_t stream,
                                            std::uint64_t position);

  [[nodiscard]] std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int cursor_ = 4;
};

/// Seed of realization `index` under master seed `master`:
///   splitmix64_finalize(master + 0x9E3779B97F4A7C15 * (index + 1)).
/// The finalizer is a bijection of uint64 and the affine map is injective in
/// the index (odd multiplier), so distinct indices get distinct seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

std::uint64_t splitmix64_finalize(std::uint64_t x);

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Philox4x32& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace idslab
