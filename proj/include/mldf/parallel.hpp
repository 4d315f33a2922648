#pragma once

#include <cstddef>
#include <functional>

namespace mldf {

// Worker cap for parallel_for; 0 means hardware_concurrency. Thread count
// never changes results: every task writes only its own output slot.
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs fn(0..n-1) across a worker pool. fn must not touch shared mutable
// state other than the slot addressed by its index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mldf
