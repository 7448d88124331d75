#pragma once

#include <functional>

namespace uent {

// Worker count: UENT_THREADS if set, else hardware concurrency.
int thread_count();

// Static contiguous partition of [begin, end) across workers. The body must
// write results to disjoint slots; any final reduction is the caller's job and
// must run in index order so output is independent of scheduling.
void parallel_for(long begin, long end, const std::function<void(long)>& body);

}  // namespace uent
