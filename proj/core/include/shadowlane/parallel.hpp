// Minimal fork-join helper: index-parallel map with a worker cap.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace shadowlane {

/// Calls fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// stops further dispatch and is rethrown after all threads join. `done[i]`
/// (if given, size n) is set once fn(i) returns normally.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn, std::vector<char>* done = nullptr) {
  if (done) done->assign(n, 0);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto run = [&] {
    for (;;) {
      if (stop.load(std::memory_order_relaxed)) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
        if (done) (*done)[i] = 1;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };
  const auto count = static_cast<std::size_t>(std::max(1, workers));
  if (count == 1 || n <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(count, n); ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace shadowlane
