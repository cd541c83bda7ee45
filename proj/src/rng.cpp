// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#include "gas/rng.hpp"

#include <cmath>

namespace gas {
namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer; full avalanche on 64 bits.
uint64_t mix64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace

CounterRng::CounterRng(uint64_t seed, uint64_t stream)
    : seed_(seed), stream_(stream) {
  base_ = mix64(mix64(seed + kGolden) ^ (stream * kGolden + 1));
}

double CounterRng::uniform_at(uint64_t counter) const {
  uint64_t r = mix64(base_ ^ (counter * kGolden + 0x632BE59BD9B4E019ull));
  // Top 53 bits, shifted into (0, 1]. Never returns 0, safe under log().
  return static_cast<double>((r >> 11) + 1) * 0x1p-53;
}

std::pair<double, double> CounterRng::normal_pair_at(uint64_t pair) const {
  double u1 = uniform_at(2 * pair);
  double u2 = uniform_at(2 * pair + 1);
  // Box-Muller in single precision: plenty for sensor noise and roughly
  // twice as fast through logf/sincosf, which matters on the fused path.
  float r = std::sqrt(-2.0f * std::log(static_cast<float>(u1)));
  float a = 6.28318530717958647692f * static_cast<float>(u2);
  return {static_cast<double>(r * std::cos(a)),
          static_cast<double>(r * std::sin(a))};
}

double CounterRng::normal_at(uint64_t index) const {
  auto p = normal_pair_at(index >> 1);
  return (index & 1) ? p.second : p.first;
}

uint64_t CounterRng::index_at(uint64_t counter, uint64_t n) const {
  uint64_t r = mix64(base_ ^ (counter * kGolden + 0xD6E8FEB86659FD93ull));
  // Multiply-shift map onto [0, n); bias is ~n / 2^64, irrelevant here.
  return static_cast<uint64_t>(
      (static_cast<unsigned __int128>(r) * n) >> 64);
}

}  // namespace gas
