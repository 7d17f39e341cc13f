#include "sse/kernels.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sse::kernels {

namespace {
std::atomic<bool> g_parallel{true};
std::atomic<std::size_t> g_threshold{1u << 15};
}  // namespace

void set_parallel(bool enabled) { g_parallel = enabled; }
bool parallel_enabled() { return g_parallel; }
void set_parallel_threshold(std::size_t flops) { g_threshold = flops; }
std::size_t parallel_threshold() { return g_threshold; }

void set_num_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace sse::kernels
