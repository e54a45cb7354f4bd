#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace chafee {

/// Run fn(i) for i in [begin, end) on up to `workers` threads. Indices are
/// handed out dynamically, so fn must write only to slots owned by i. The
/// first exception thrown by fn is rethrown after all threads join.
template <typename Fn>
void parallel_for(long begin, long end, int workers, Fn&& fn) {
  if (end <= begin) return;
  const long count = end - begin;
  const int threads = static_cast<int>(std::clamp<long>(workers, 1, count));
  if (threads == 1) {
    for (long i = begin; i < end; ++i) fn(i);
    return;
  }
  std::atomic<long> next{begin};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= end) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(end);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads - 1));
  for (int t = 1; t < threads; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace chafee
