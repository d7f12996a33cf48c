#pragma once

#include <cstddef>
#include <functional>

namespace invopt {

/// Worker count for `tasks` independent jobs: hardware concurrency, capped
/// by INVOPT_THREADS when set, and never more than the number of tasks.
std::size_t worker_count(std::size_t tasks);

/// Runs fn(0..n-1) on a pool of worker_count(n) threads. Results must be
/// written to per-index slots; the first exception by index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace invopt
