#pragma once

#include <cstddef>
#include <functional>

namespace wdsel {

/// Worker count: WDSEL_THREADS if set (>= 1), else hardware concurrency.
std::size_t thread_count();

/// Runs fn(i) for i in [0, n). Each index writes only its own slot, so results
/// do not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace wdsel
