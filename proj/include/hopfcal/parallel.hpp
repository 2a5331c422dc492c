#pragma once

#include <cstddef>
#include <functional>

namespace hopfcal {

// Worker count: HOPFCAL_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
unsigned worker_count();

// Runs body(i) for i in [0, n) on up to worker_count() threads. Each index is
// handled exactly once; results written to per-index slots are therefore
// independent of scheduling. The exception from the lowest failing index is rethrown after all
// workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hopfcal
