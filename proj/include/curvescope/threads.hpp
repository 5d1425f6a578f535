#ifndef CURVESCOPE_THREADS_HPP
#define CURVESCOPE_THREADS_HPP

#include <cstdint>
#include <functional>

namespace curvescope {

// Worker cap shared by all parallel kernels. Initialized from the
// CURVESCOPE_THREADS environment variable, overridden by --threads.
int thread_cap();
void set_thread_cap(int n);

// Runs fn(i) for i in [0, n). Each index writes only its own output slot, so
// results are identical for any thread count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace curvescope

#endif
