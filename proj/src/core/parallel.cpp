#include "tabsense/core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tabsense {

namespace {
std::atomic<size_t> g_max_threads{0};
}

void SetMaxThreads(size_t threads) { g_max_threads = threads; }

size_t MaxThreads() {
  const size_t configured = g_max_threads.load();
  if (configured > 0) return configured;
  return std::max<size_t>(1, std::thread::hardware_concurrency());
}

void ParallelFor(size_t n, const std::function<void(size_t, size_t)>& fn, size_t min_chunk) {
  if (n == 0) return;
  const size_t by_size = (n + std::max<size_t>(1, min_chunk) - 1) / std::max<size_t>(1, min_chunk);
  const size_t workers = std::min(MaxThreads(), by_size);
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  const size_t chunk = (n + workers - 1) / workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    const size_t begin = w * chunk;
    const size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace tabsense
