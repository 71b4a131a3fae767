#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace licam {

/// Runs fn(begin, end) over [0, n) split into contiguous chunks, one per
/// worker. Results must be written to disjoint, preallocated slots so the
/// output is identical for any thread count.
inline void parallel_for(int n, int threads,
                         const std::function<void(int, int)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n <= 1) {
    fn(0, n);
    return;
  }
  threads = std::min(threads, n);
  const int chunk = (n + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace licam
