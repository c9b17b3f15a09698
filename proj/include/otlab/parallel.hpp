#pragma once

#include <cstddef>
#include <functional>

namespace otlab {

/// Worker count: OTLAB_THREADS if set (>= 1), else hardware concurrency.
int thread_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries
/// depend only on n, so callers that reduce per-chunk partials in chunk order
/// get results that do not depend on the number of threads.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace otlab
