#pragma once

#include <cstddef>
#include <functional>

namespace reluforge {

/// Worker count: RELUFORGE_THREADS if set and positive, else all cores.
std::size_t thread_count();

/// Runs body(i) for i in [0, n) across up to thread_count() threads.
/// Callers write results into per-index slots so the outcome does not
/// depend on scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace reluforge
