#include "curvescope/threads.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace curvescope {

namespace {

int initial_cap() {
  if (const char* env = std::getenv("CURVESCOPE_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int g_cap = initial_cap();

}  // namespace

int thread_cap() { return g_cap; }

void set_thread_cap(int n) {
  if (n >= 1) g_cap = n;
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
#ifdef _OPENMP
  if (g_cap > 1 && n > 1) {
    // Exceptions cannot cross an OpenMP region; stash the first one and
    // rethrow once every worker has drained.
    std::exception_ptr error;
    std::atomic<bool> failed{false};
#pragma omp parallel for schedule(static) num_threads(g_cap)
    for (std::int64_t i = 0; i < n; ++i) {
      if (failed.load(std::memory_order_relaxed)) continue;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) fn(i);
}

}  // namespace curvescope
