#pragma once

#include <cstddef>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace occrelax::parallel {

enum class Schedule { Static, Dynamic };

/// Thread cap: OCCRELAX_THREADS if set and positive, else the OpenMP default.
inline int maxThreads() {
#ifdef _OPENMP
  if (const char* env = std::getenv("OCCRELAX_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Runs body(i) for i in [0, count). Bodies must only write their own slots.
template <class Body>
void forEach(std::size_t count, Body&& body, Schedule schedule = Schedule::Static) {
#ifdef _OPENMP
  const long n = static_cast<long>(count);
  const int threads = maxThreads();
  if (schedule == Schedule::Dynamic) {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
  } else {
#pragma omp parallel for schedule(static) num_threads(threads)
    for (long i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
  }
#else
  (void)schedule;
  for (std::size_t i = 0; i < count; ++i) body(i);
#endif
}

}  // namespace occrelax::parallel
