#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace covmt {

namespace detail {
inline std::atomic<int>& thread_count_slot() {
  static std::atomic<int> count{0};  // 0 = use hardware concurrency
  return count;
}
inline bool& in_parallel_region() {
  thread_local bool flag = false;
  return flag;
}
}  // namespace detail

inline int hardware_threads() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

inline void set_num_threads(int n) { detail::thread_count_slot().store(n); }

inline int num_threads() {
  int n = detail::thread_count_slot().load();
  return n <= 0 ? hardware_threads() : n;
}

// Runs fn(begin, end) over fixed-size chunks of [0, n). The chunk partition
// depends only on n and chunk_size, never on the thread count, so per-chunk
// results are identical whether the loop runs on 1 thread or many. Nested
// calls run serially on the calling thread.
inline void parallel_for_chunks(
    std::size_t n, std::size_t chunk_size,
    const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
  const int workers =
      static_cast<int>(std::min<std::size_t>(num_threads(), n_chunks));

  if (workers <= 1 || detail::in_parallel_region()) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const std::size_t b = c * chunk_size;
      fn(b, std::min(b + chunk_size, n));
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::mutex err_mutex;

  auto worker = [&]() {
    detail::in_parallel_region() = true;
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks || failed.load()) break;
      const std::size_t b = c * chunk_size;
      try {
        fn(b, std::min(b + chunk_size, n));
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!failed.exchange(true)) first_error = std::current_exception();
        break;
      }
    }
    detail::in_parallel_region() = false;
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failed.load()) std::rethrow_exception(first_error);
}

// Deterministic parallel reduction: partials are produced per fixed chunk and
// combined in chunk order, so the result is bit-identical for any thread
// count.
template <class T, class ChunkFn, class CombineFn>
T parallel_reduce_ordered(std::size_t n, std::size_t chunk_size, T init,
                          const ChunkFn& chunk_fn, const CombineFn& combine) {
  if (n == 0) return init;
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
  std::vector<T> partials(n_chunks, init);
  parallel_for_chunks(n, chunk_size,
                      [&](std::size_t b, std::size_t e) {
                        partials[b / chunk_size] = chunk_fn(b, e);
                      });
  T acc = std::move(init);
  for (std::size_t c = 0; c < n_chunks; ++c) acc = combine(acc, partials[c]);
  return acc;
}

}  // namespace covmt
