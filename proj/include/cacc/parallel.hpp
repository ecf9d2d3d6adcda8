#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace cacc {

// Static contiguous partition of [0, n) into at most `threads` chunks, one
// worker thread per chunk. Workers must write to disjoint locations; with
// that discipline results are bit-identical to a serial run regardless of
// scheduling. threads <= 1 runs inline.
template <class Fn>
void parallel_for_chunks(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace cacc
