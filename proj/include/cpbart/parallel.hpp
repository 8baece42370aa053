#pragma once

#include <functional>

namespace cpbart {

/// Worker count: CPBART_THREADS if set to a positive integer, else the hardware count.
int default_thread_count();

/// Runs body(0..n-1) over up to `threads` workers (0: default_thread_count()).
/// Each index runs exactly once; the first exception thrown is rethrown.
void parallel_for(int n, const std::function<void(int)>& body, int threads = 0);

}  // namespace cpbart
