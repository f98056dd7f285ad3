#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ensweight::detail {

inline int resolve_workers(int requested, std::size_t jobs) {
  const int workers =
      requested > 0 ? requested
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers),
                                                std::max<std::size_t>(jobs, 1)));
}

// Runs fn(k) for every k in [0, jobs). Callers write results by index, so the
// outcome does not depend on how work is scheduled across threads.
template <typename Fn>
void parallel_for(std::size_t jobs, int workers, Fn&& fn) {
  if (workers <= 1 || jobs <= 1) {
    for (std::size_t k = 0; k < jobs; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < jobs; k = next++) {
          try {
            fn(k);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ensweight::detail
