#pragma once

#include <cstddef>
#include <functional>

namespace apde {

/// Sets the number of workers used by parallel_for. 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Splits [0, n) into contiguous chunks, one per worker, and runs
/// body(begin, end) on each. The partition depends only on n and the thread
/// count; callers that need bit-identical results across thread counts must
/// make every output element independent of the partition.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

} // namespace apde
