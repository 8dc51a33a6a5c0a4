#pragma once

#include <cstddef>
#include <functional>

namespace cernet {

// Worker count: CERNET_THREADS when set to a positive integer, otherwise
// the hardware concurrency (at least 1).
int worker_count();

// Runs job(i) for i in [0, count) on up to worker_count() threads. Jobs
// must not share mutable state. The first exception thrown by any job is
// rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job,
                  int max_workers = 0);

}  // namespace cernet
