// Deterministic work partitioning. Items are split into fixed chunks that do
// not depend on the worker count, so floating-point reductions associate the
// same way under any RISKPLAN_THREADS setting.
#pragma once

#include <cstddef>
#include <functional>

namespace riskplan {

// Worker cap: RISKPLAN_THREADS if set, otherwise hardware concurrency.
int worker_count();

// Runs fn(i) for i in [0, n) across workers. fn must only touch slot i of any
// shared output.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace riskplan
