#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace asub {

/// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads, each
/// thread taking a contiguous block. fn must only write to per-index slots.
/// The exception from the lowest failing index is rethrown.
template <typename Fn>
void parallel_for(long n, Fn&& fn, unsigned max_threads = 0) {
  if (n <= 0) return;
  unsigned hw = max_threads ? max_threads : std::max(1u, std::thread::hardware_concurrency());
  const long workers = std::min<long>(hw, n);
  if (workers <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  long failed_index = n;
  std::exception_ptr failure;
  auto run = [&](long lo, long hi) {
    for (long i = lo; i < hi; ++i) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  const long block = (n + workers - 1) / workers;
  for (long w = 0; w < workers; ++w) {
    const long lo = w * block, hi = std::min(n, lo + block);
    if (lo < hi) pool.emplace_back(run, lo, hi);
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace asub
