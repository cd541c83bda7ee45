// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <utility>

namespace gas {

// Counter-based random source. Every draw is a pure function of
// (seed, stream, counter), so values can be generated in any order, from
// any thread, at any time, and always agree bit for bit. Streams partition
// the space between independent consumers (per stage, per step, per image).
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t stream);

  // Uniform in (0, 1], 53-bit resolution.
  double uniform_at(uint64_t counter) const;

  // Standard normal. Indices 2p and 2p+1 form one Box-Muller pair built
  // from uniforms at counters 2p and 2p+1.
  double normal_at(uint64_t index) const;

  // Both halves of pair p, i.e. {normal_at(2p), normal_at(2p+1)} in one call.
  std::pair<double, double> normal_pair_at(uint64_t pair) const;

  // Uniform integer in [0, n), n >= 1.
  uint64_t index_at(uint64_t counter, uint64_t n) const;

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }

 private:
  uint64_t seed_;
  uint64_t stream_;
  uint64_t base_;
};

}  // namespace gas
