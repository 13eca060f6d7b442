#pragma once

#include <cstddef>
#include <functional>

namespace dcre {

/// Upper bound on worker threads for parallel loops. 0 means hardware concurrency.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs body(i) for i in [0, n) over contiguous static chunks. Callers write
/// results into per-index slots and reduce afterwards in index order, which
/// keeps results independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace dcre
