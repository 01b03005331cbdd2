#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fracsde::io {

struct BatchError : std::runtime_error {
  BatchError(std::size_t batch, const std::string& what)
      : std::runtime_error("batch " + std::to_string(batch) + " failed: " + what), batch_index(batch) {}
  std::size_t batch_index;
};

// Owns worker threads. Work items [0,n) are cut into fixed batches; batch b is
// executed by worker b % workers. Callers write results into per-item slots, so
// the outcome never depends on batch size or worker count.
struct Executor {
  std::size_t workers = 1;
  std::size_t batch_size = 64;

  template <class Fn>
  void for_each(std::size_t n, Fn&& fn) const {
    const std::size_t bs = std::max<std::size_t>(1, batch_size);
    const std::size_t n_batches = (n + bs - 1) / bs;
    const std::size_t w = std::max<std::size_t>(1, std::min(workers, n_batches));
    auto run_batch = [&](std::size_t b) {
      const std::size_t lo = b * bs, hi = std::min(n, lo + bs);
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    };
    if (w == 1) {
      for (std::size_t b = 0; b < n_batches; ++b) {
        try {
          run_batch(b);
        } catch (const std::exception& e) {
          throw BatchError(b, e.what());
        }
      }
      return;
    }
    std::mutex mu;
    std::size_t failed = n_batches;
    std::string msg;
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < w; ++k) {
      pool.emplace_back([&, k] {
        for (std::size_t b = k; b < n_batches; b += w) {
          try {
            run_batch(b);
          } catch (const std::exception& e) {
            std::lock_guard lock(mu);
            if (b < failed) failed = b, msg = e.what();
            return;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failed < n_batches) throw BatchError(failed, msg);
  }
};

inline const Executor& serial() {
  static const Executor e{1, 64};
  return e;
}

}  // namespace fracsde::io
