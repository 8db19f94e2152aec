#pragma once

#include <cstddef>
#include <functional>

namespace normclash {

// Runs fn(0..count-1) on up to `threads` workers (1 = inline). Jobs are
// claimed dynamically; callers write results into per-index slots so the
// outcome is independent of scheduling. The first exception is rethrown.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

// --threads, else NORMCLASH_THREADS, else 1.
std::size_t resolve_threads(std::size_t requested);

}  // namespace normclash
