#pragma once

#include <cstddef>
#include <functional>

namespace mbdiag {

/// Worker cap from MBDIAG_THREADS (0 or unset = hardware concurrency).
int worker_count();

/// Runs fn(0..n-1) across workers. Callers own determinism: write results
/// into per-index slots and combine in index order afterwards.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mbdiag
