#pragma once

#include <cstddef>
#include <functional>

namespace avemo {

// Calls fn(i) for i in [0, n) on up to `jobs` threads (the caller included).
// Indices are handed out dynamically; the first exception thrown is rethrown
// after all workers stop.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace avemo
