#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace rvd {

// Global worker count for the batch loops. 0 means hardware concurrency.
// Results are independent of this setting: loops are partitioned over
// independent targets only, never over a shared reduction.
void set_thread_count(int n);
int thread_count();

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  int t = thread_count();
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  if (t <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(t), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t k = 0; k < workers; ++k) {
    const std::size_t lo = n * k / workers;
    const std::size_t hi = n * (k + 1) / workers;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail
}  // namespace rvd
