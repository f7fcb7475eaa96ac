#pragma once

#include <cstddef>
#include <functional>

namespace hflow {

// Worker count, capped by the HFLOW_THREADS environment variable.
int thread_count();

// Runs body(i) for i in [0, n). Iterations must be independent; results are
// identical to the serial loop regardless of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hflow
