// SPDX-License-Identifier: Apache-2.0
//
// OpenMP work distribution over independent (batch, head, block-row) slices.
// threads == 1 runs the plain serial loop; any other count goes through
// OpenMP. Slices write disjoint outputs, so results are identical either way.

#pragma once

#include <cstddef>
#include <cstdlib>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace pasa {

/// Resolve a worker count: explicit request wins, then the PASA_THREADS
/// environment variable, then the OpenMP default (1 without OpenMP).
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PASA_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <class F>
void parallel_for(size_t n, int threads, F&& body) {
  threads = resolve_threads(threads);
  if (threads == 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
#if defined(_OPENMP)
#pragma omp parallel for num_threads(threads) schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    body(static_cast<size_t>(i));
  }
#else
  for (size_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace pasa
