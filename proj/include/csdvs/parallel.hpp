#pragma once

namespace csdvs {

// Worker count used by the row-parallel kernels. Results never depend on it:
// every kernel either updates independent pixels or reduces per-row partials
// in row order.
//
// Defaults to CSDVS_THREADS when set, otherwise min(hardware threads, 8).
int worker_count();

// Overrides the worker count for the calling process (n <= 0 restores the
// default).
void set_worker_count(int n);

}  // namespace csdvs
