// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

namespace gas {

// Number of worker threads. Reads GAS_THREADS once on first use; falls back
// to the hardware count. Always at least 1.
int thread_count();

// Runs f(i) for i in [begin, end) split into per-thread contiguous blocks.
// Each index is handled by exactly one thread, so as long as distinct
// indices touch distinct output elements the result is independent of the
// thread count. Runs inline when a single worker is configured.
void parallel_for(long begin, long end, const std::function<void(long)>& f);

}  // namespace gas
