#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace transcut {

/// Splits [0, rows) into contiguous bands and runs fn(begin, end) on each band.
/// Callers must only write rows inside their band.
template <typename Fn>
void parallel_rows(int rows, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(rows, 1));
  if (threads == 1) {
    fn(0, rows);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  pool.reserve(static_cast<std::size_t>(threads));
  for (int k = 0; k < threads; ++k) {
    const int begin = rows * k / threads;
    const int end = rows * (k + 1) / threads;
    pool.emplace_back([&, k, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Runs fn(i) for i in [0, n) across workers; each index is processed exactly once.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  parallel_rows(n, threads, [&](int b, int e) {
    for (int i = b; i < e; ++i) fn(i);
  });
}

}  // namespace transcut
