#pragma once

// Deterministic index-space parallelism. Each work item writes to its own
// slot, so results never depend on scheduling or the worker count.

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace driftval {

/// Process-wide worker count. 0 means "use hardware concurrency".
inline std::atomic<unsigned>& job_count_slot() {
  static std::atomic<unsigned> jobs{0};
  return jobs;
}

inline void set_jobs(unsigned jobs) { job_count_slot().store(jobs); }

inline unsigned effective_jobs() {
  unsigned jobs = job_count_slot().load();
  if (jobs == 0) {
    jobs = std::thread::hardware_concurrency();
    if (jobs == 0) jobs = 1;
  }
  return jobs;
}

/// Runs fn(i) for i in [0, count). The callable must only write state owned
/// by index i. Exceptions are captured and rethrown on the caller thread.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const unsigned jobs = effective_jobs();
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned spawn = static_cast<unsigned>(
      std::min<std::size_t>(jobs, count));
  pool.reserve(spawn);
  for (unsigned j = 0; j < spawn; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace driftval
