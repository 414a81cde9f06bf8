#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace swarmsim {

/// Runs fn(replica_index) for indices 0..n-1 across worker threads. Results
/// land in index order, so aggregation is independent of the schedule; each
/// replica derives its own random stream from its index.
template <typename T>
std::vector<T> run_replicas(std::int64_t n, const std::function<T(std::int64_t)>& fn,
                            unsigned threads = 0) {
  std::vector<T> results(static_cast<std::size_t>(n));
  if (threads == 0) threads = std::thread::hardware_concurrency();
  if (threads == 0) threads = 1;
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
  if (threads <= 1) {
    for (std::int64_t i = 0; i < n; ++i) results[static_cast<std::size_t>(i)] = fn(i);
    return results;
  }
  std::atomic<std::int64_t> cursor{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      std::int64_t i = cursor.fetch_add(1);
      if (i >= n) return;
      try {
        results[static_cast<std::size_t>(i)] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace swarmsim
