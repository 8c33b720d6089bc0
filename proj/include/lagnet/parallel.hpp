#pragma once

#include <cstddef>
#include <functional>

namespace lagnet {

// Worker count from LAGNET_THREADS (0 or 1 = serial); hardware concurrency
// when unset or unparsable.
std::size_t default_thread_count();

// Runs fn(0..n-1) on up to `threads` workers. The first exception (by index)
// is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace lagnet
