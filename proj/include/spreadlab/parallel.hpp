#pragma once

// Every data-parallel kernel in the library comes in two flavours selected by
// ExecutionPolicy: an OpenMP loop and a plain serial loop. The serial path is
// the reference the tests compare against; both must produce identical bits.

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spreadlab {

enum class ExecutionPolicy { Serial, Parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

/// Runs body(i) for i in [0, n). Iterations must write only to their own slot.
/// An exception thrown by any iteration is rethrown after the loop; when
/// several iterations fail, the one with the lowest index wins so the error
/// seen by the caller does not depend on scheduling.
template <typename Body>
void parallel_for(ExecutionPolicy policy, std::ptrdiff_t n, Body&& body) {
  if (policy == ExecutionPolicy::Parallel && n > 1) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
  }
}

}  // namespace spreadlab
