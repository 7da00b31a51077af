#pragma once

#include <cstddef>
#include <functional>

namespace geofb {

/// Runs fn(0) .. fn(n-1) on up to `threads` worker threads (the calling
/// thread included). Each index runs exactly once; callers write results by
/// index so output does not depend on scheduling. If any call throws, the
/// exception from the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace geofb
