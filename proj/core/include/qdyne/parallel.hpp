#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace qdyne {

/// Worker count to use when a caller passes 0.
unsigned resolve_threads(unsigned requested);

/// Splits [0, n) into contiguous chunks and calls fn(begin, end) on each.
/// The chunking never affects results as long as fn is a pure function of the index.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n / 4096, 1)));
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

}  // namespace qdyne
