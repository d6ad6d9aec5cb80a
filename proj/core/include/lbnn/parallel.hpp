#pragma once

#include <cstddef>
#include <functional>

namespace lbnn {

/// Worker count: $LBNN_WORKERS if set and positive, else hardware concurrency (≥ 1).
int default_workers();

/// Resolves a requested worker count; values ≤ 0 mean default_workers().
int resolve_workers(int requested);

/// Runs task(i) for i in [0, n) on up to `workers` threads.
///
/// Tasks must write only to their own output slot; any reduction is done by the caller
/// in index order afterwards. If tasks throw, the exception from the lowest index is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task);

}  // namespace lbnn
