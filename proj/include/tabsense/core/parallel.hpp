#pragma once

#include <cstddef>
#include <functional>

namespace tabsense {

// Worker count used by ParallelFor; 0 restores hardware_concurrency.
void SetMaxThreads(size_t threads);
size_t MaxThreads();

// Runs fn(begin, end) over contiguous chunks of [0, n). Chunks are fixed by n
// and the thread count, so per-index results never depend on scheduling.
// Exceptions from workers are rethrown on the calling thread.
void ParallelFor(size_t n, const std::function<void(size_t, size_t)>& fn,
                 size_t min_chunk = 64);

}  // namespace tabsense
