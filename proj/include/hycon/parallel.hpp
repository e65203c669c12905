#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace hycon {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is visited
// exactly once; callers write results into per-index slots so the output does
// not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
}

// Pairwise-tree sum with a fixed association order.
template <typename T>
T pairwise_sum(std::span<const T> items) {
  if (items.size() == 1) return items[0];
  const std::size_t half = items.size() / 2;
  return pairwise_sum(items.first(half)) + pairwise_sum(items.subspan(half));
}

}  // namespace hycon
