#include "vsglight/parallel.h"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace vsg {

void apply_thread_env() {
  const char* env = std::getenv("VSGLIGHT_THREADS");
  if (!env) return;
  try {
    int n = std::stoi(env);
    if (n >= 1) omp_set_num_threads(n);
  } catch (...) {
    // Ignore unparsable values; the default thread count stays in effect.
  }
}

void set_thread_count(int n) {
  if (n >= 1) omp_set_num_threads(n);
}

int thread_count() { return omp_get_max_threads(); }

int current_thread() { return omp_get_thread_num(); }

}  // namespace vsg
