#pragma once

#include <cstddef>
#include <functional>

namespace torusppca {

/// Worker count from TORUSPPCA_THREADS, falling back to the hardware
/// concurrency (at least 1).
unsigned default_thread_count();

/// Calls body(i) for every i in [0, count) on up to `threads` workers.
/// Indices are handed out dynamically, so body must write only to slot i of
/// its outputs; results are then independent of scheduling. The first
/// exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  unsigned threads = 0);

}  // namespace torusppca
