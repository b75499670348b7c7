#pragma once

#include <cstddef>
#include <functional>

namespace countfree {

/// Calls fn(i) for every i in [0, n) on up to `threads` worker threads
/// (0 = hardware concurrency). Indices are claimed dynamically, so fn must
/// write only to slots owned by i. The first exception thrown by any call is
/// rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace countfree
