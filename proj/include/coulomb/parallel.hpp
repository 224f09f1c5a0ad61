#pragma once

#include <cstddef>
#include <functional>

namespace coulomb {

/// Worker bound: COULOMB_LAB_THREADS if set and positive, else the hardware count.
int worker_count();

/// Calls body(i) for i in [0, n) on up to worker_count() threads. Results must be
/// written to per-index slots; reductions are the caller's job, in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace coulomb
