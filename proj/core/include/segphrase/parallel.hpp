#pragma once

#include <cstddef>
#include <functional>

namespace segphrase {

// Runs body(i) for i in [0, count) on up to `jobs` threads. Callers write
// results into pre-sized slots so output order never depends on scheduling.
// The first exception thrown by any body is rethrown after all threads join.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace segphrase
