#pragma once

#include <cstdlib>
#include <cstddef>
#include <thread>
#include <vector>

namespace snlab {

inline int default_workers() {
  if (const char* env = std::getenv("SNLAB_WORKERS")) {
    int w = std::atoi(env);
    if (w > 0) return w;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// Runs fn(begin, end) over disjoint contiguous chunks covering [0, count).
// Chunk boundaries depend only on (count, workers), so reductions that
// combine per-chunk results in chunk order stay deterministic.
template <typename Fn>
void parallel_chunks(std::size_t count, Fn&& fn, int workers = 0) {
  if (workers <= 0) workers = default_workers();
  if (workers == 1 || count < 4096) {
    fn(std::size_t{0}, count);
    return;
  }
  std::size_t nchunk = static_cast<std::size_t>(workers);
  if (nchunk > count) nchunk = count;
  std::vector<std::thread> pool;
  pool.reserve(nchunk - 1);
  std::size_t base = count / nchunk, extra = count % nchunk, begin = 0;
  std::size_t first_end = base + (extra > 0 ? 1 : 0);
  for (std::size_t c = 1; c < nchunk; ++c) {
    std::size_t len = base + (c < extra ? 1 : 0);
    std::size_t b = first_end;
    for (std::size_t d = 1; d < c; ++d) b += base + (d < extra ? 1 : 0);
    pool.emplace_back([&fn, b, len] { fn(b, b + len); });
  }
  fn(begin, first_end);
  for (auto& t : pool) t.join();
}

}  // namespace snlab
