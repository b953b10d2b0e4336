#pragma once

#include <cstdint>

namespace vsg {

// Applies the VSGLIGHT_THREADS override (the only environment variable the
// tools honor). No-op when the variable is unset or unparsable.
void apply_thread_env();

void set_thread_count(int n);
int thread_count();
// Index of the calling thread inside a parallel region (0 when serial).
int current_thread();

// Static-schedule parallel loop. Work item i always lands on the same thread
// for a fixed thread count, which keeps thread-local gradient merges stable.
template <class F>
inline void parallel_for(int64_t n, const F& f) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) f(i);
}

}  // namespace vsg
