// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#include "gas/parallel.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace gas {

int thread_count() {
  static int n = [] {
    if (const char* env = std::getenv("GAS_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
  }();
  return n;
}

void parallel_for(long begin, long end, const std::function<void(long)>& f) {
  long n = end - begin;
  if (n <= 0) return;
  int workers = thread_count();
  if (workers > n) workers = static_cast<int>(n);
  if (workers <= 1) {
    for (long i = begin; i < end; ++i) f(i);
    return;
  }
  // Static contiguous partition; block boundaries depend only on n and the
  // configured worker count, never on scheduling.
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(workers));
  long chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    long lo = begin + static_cast<long>(w) * chunk;
    long hi = lo + chunk < end ? lo + chunk : end;
    if (lo >= hi) break;
    threads.emplace_back([lo, hi, &f] {
      for (long i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace gas
