#pragma once

#include <cstddef>
#include <functional>

namespace percept {

/// Worker count used by parallel_for: PERCEPT_THREADS if set, else the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(i) for every i in [0, n). Iterations must be independent; results
/// never depend on the worker count because no reduction happens here.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace percept
