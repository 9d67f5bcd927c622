#pragma once

#include <cstdint>
#include <functional>

namespace portopt {

// Worker count: PORTOPT_THREADS if set, else hardware concurrency.
int worker_count();

// Runs fn(begin, end) over disjoint chunks of [0, n), possibly on several
// threads.  Callers write results into per-index slots and reduce afterwards
// in index order, so outputs do not depend on the schedule.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace portopt
