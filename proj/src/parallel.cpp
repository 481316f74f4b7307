#include "sysid/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

namespace sysid::parallel {

namespace {
std::atomic<int> g_requested{0};
}

int thread_count() {
  const int requested = g_requested.load();
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SYSID_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return std::max(omp_get_max_threads(), 1);
}

void set_thread_count(int n) { g_requested.store(std::max(n, 0)); }

}  // namespace sysid::parallel
