#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sklab {

/// Runs fn(chunk) for every chunk in [0, chunks) on up to `workers` threads.
/// Chunks are claimed dynamically, so callers that need reproducible
/// results must write per-chunk outputs and reduce them in chunk order.
template <class Fn>
void for_each_chunk(std::size_t chunks, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, chunks));
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
          try {
            fn(c);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(chunks);
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace sklab
