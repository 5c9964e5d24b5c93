#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace c2f {

// Global worker budget for the OpenMP kernels. 0 means "use the hardware".
// Parallel loops are written so the result is bitwise identical for every
// worker count; the budget only controls how many threads do the work.
void set_max_workers(int n);
int max_workers();

// Threads to request for a parallel region at this call site.
int worker_count();

// True when a parallel region should actually fan out (workers > 1 and we
// are not already inside another parallel region).
inline bool par_enabled() {
#ifdef _OPENMP
    return worker_count() > 1 && omp_in_parallel() == 0;
#else
    return false;
#endif
}

} // namespace c2f
