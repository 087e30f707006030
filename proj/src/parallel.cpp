#include "mre/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mre {

namespace {
std::atomic<int> g_cap{0};

int env_cap() {
  const char* raw = std::getenv("MRE_THREADS");
  if (raw == nullptr) return 0;
  try {
    const int v = std::stoi(raw);
    return v > 0 ? v : 0;
  } catch (...) {
    return 0;
  }
}
}  // namespace

int thread_count() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
#else
  int n = 1;
#endif
  int cap = g_cap.load();
  if (cap == 0) cap = env_cap();
  if (cap > 0) n = std::min(n, cap);
  return std::max(n, 1);
}

void set_thread_cap(int cap) { g_cap.store(std::max(cap, 0)); }

}  // namespace mre
