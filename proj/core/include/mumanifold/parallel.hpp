#pragma once

#include <cstddef>
#include <functional>

namespace mumanifold {

/// Worker count: hardware concurrency, capped by MU_MANIFOLD_THREADS and by
/// `requested` when nonzero.
unsigned worker_count(unsigned requested = 0);

/// Runs body(i) for i in [0, n) with dynamic scheduling. Each index must write
/// only to its own output slot so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  unsigned workers);

}  // namespace mumanifold
