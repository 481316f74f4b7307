#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#include <omp.h>

namespace sysid::parallel {

/// Worker count for map_trials: the value set by set_thread_count, else the
/// SYSID_THREADS environment variable, else OpenMP's default.
int thread_count();

/// 0 restores the default.
void set_thread_count(int n);

/// Evaluates f(0..n-1) on the OpenMP team. Each index writes only its own
/// slot, so the result is independent of the schedule. The first exception by
/// index is rethrown after the loop.
template <class R, class F>
std::vector<R> map_trials(std::size_t n, F&& f) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
  for (long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

/// Serial reference for map_trials.
template <class R, class F>
std::vector<R> map_trials_serial(std::size_t n, F&& f) {
  std::vector<R> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
  return out;
}

}  // namespace sysid::parallel
