#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "subboot/types.hpp"

namespace subboot {

/// Runs body(state, i) for i in [0, count) on up to `workers` threads.
///
/// `make_state()` builds one scratch object per worker. Work items are claimed
/// from a shared counter, so callers must write results into slot i and reduce
/// afterwards in index order; that keeps the output independent of the worker
/// count. The first exception thrown by any item is rethrown after all threads
/// have joined.
template <typename MakeState, typename Body>
void parallel_for(Index count, int workers, MakeState&& make_state, Body&& body) {
  if (count <= 0) return;
  const int threads = static_cast<int>(std::clamp<Index>(workers < 1 ? 1 : workers, 1, count));
  if (threads == 1) {
    auto state = make_state();
    for (Index i = 0; i < count; ++i) body(state, i);
    return;
  }

  std::atomic<Index> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    try {
      auto state = make_state();
      for (Index i = next.fetch_add(1); i < count && !failed.load(); i = next.fetch_add(1)) {
        body(state, i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      failed.store(true);
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads - 1));
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Worker count to use when the caller asks for "all cores" (workers <= 0).
inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace subboot
