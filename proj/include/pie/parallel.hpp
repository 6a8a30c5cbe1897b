#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace pie {

// Splits [0, n) into `threads` contiguous chunks and runs
// fn(chunk_index, begin, end) on each. threads <= 1 runs inline.
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t threads, Fn&& fn) {
  if (n == 0) return;
  if (threads <= 1 || n == 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t base = n / threads, extra = n % threads;
  std::size_t begin = 0;
  for (std::size_t c = 0; c < threads; ++c) {
    const std::size_t size = base + (c < extra ? 1 : 0);
    pool.emplace_back(
        [&fn, c, begin, end = begin + size] { fn(c, begin, end); });
    begin += size;
  }
  for (auto& t : pool) t.join();
}

}  // namespace pie
