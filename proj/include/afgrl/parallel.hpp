#pragma once

#include <cstddef>
#include <functional>

namespace afgrl {

// Global cap on worker threads used by the kernels (1 = sequential).
void set_max_threads(int n);
int max_threads();

// Runs body(begin, end) over contiguous chunks of [0, n). Chunking splits
// output rows only; every per-element reduction stays sequential, so results
// are bit-identical to a single-threaded run.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace afgrl
