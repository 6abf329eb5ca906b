#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace lka {

// Runs fn(begin, end) on contiguous slices of [0, count). Slices are fixed by
// (count, threads), so per-slice work is reproducible for any thread count.
template <class Fn>
void parallel_for(std::ptrdiff_t count, int threads, Fn&& fn) {
  if (count <= 0) return;
  const int t = std::clamp<std::ptrdiff_t>(threads, 1, count);
  if (t == 1) {
    fn(std::ptrdiff_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (int k = 0; k < t; ++k) {
    const std::ptrdiff_t b = count * k / t, e = count * (k + 1) / t;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace lka
