#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace sigaudit {

/// Environment variable consulted for the default worker count.
inline constexpr const char* kWorkersEnv = "SIGAUDIT_WORKERS";

/// `SIGAUDIT_WORKERS` if set to a positive integer, else hardware concurrency (min 1).
std::size_t default_worker_count();

/// Bounded fork-join executor. Work items are addressed by index, so callers that write
/// results into per-index slots get output independent of the worker count.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers = default_worker_count())
      : workers_(std::max<std::size_t>(1, workers)) {}

  [[nodiscard]] std::size_t size() const noexcept { return workers_; }

  /// Calls fn(begin, end) over [0, count) in blocks of at most `grain` indices.
  /// If any block throws, the exception from the lowest-indexed failing block is rethrown.
  template <typename Fn>
  void for_each_block(std::size_t count, std::size_t grain, Fn&& fn) const {
    if (count == 0) return;
    grain = std::max<std::size_t>(1, grain);
    const std::size_t blocks = (count + grain - 1) / grain;
    const std::size_t threads = std::min(workers_, blocks);
    if (threads <= 1) {
      for (std::size_t b = 0; b < blocks; ++b) fn(b * grain, std::min(count, (b + 1) * grain));
      return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_block = std::numeric_limits<std::size_t>::max();
    std::exception_ptr error;

    auto worker = [&] {
      for (;;) {
        const std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
        if (b >= blocks) return;
        try {
          fn(b * grain, std::min(count, (b + 1) * grain));
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (b < error_block) {
            error_block = b;
            error = std::current_exception();
          }
        }
      }
    };

    {
      std::vector<std::jthread> pool;
      pool.reserve(threads - 1);
      for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
      worker();
    }
    if (error) std::rethrow_exception(error);
  }

  template <typename Fn>
  void for_each(std::size_t count, Fn&& fn) const {
    for_each_block(count, 1, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }

 private:
  std::size_t workers_;
};

}  // namespace sigaudit
