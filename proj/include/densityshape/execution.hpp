#pragma once

#include <cstddef>
#include <exception>

namespace densityshape {

//! Selects between the OpenMP kernel and the plain serial loop it is tested
//! against. Both produce identical results: work items write to their own
//! slot and reductions happen afterwards in index order.
enum class Exec
{
  serial,
  parallel
};

//! Runs body(i) for i in [0, count). Iterations must be independent. An
//! exception escaping the parallel loop is rethrown once the loop finishes
//! (the one from the lowest index wins).
template<class Body>
void for_each_index(std::size_t count, Exec exec, Body&& body)
{
  if (exec == Exec::parallel) {
    const long long n = static_cast<long long>(count);
    std::exception_ptr failure;
    long long failed_at = n;
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < n; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(densityshape_for_each_index)
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
    if (failure)
      std::rethrow_exception(failure);
  } else {
    for (std::size_t i = 0; i < count; ++i)
      body(i);
  }
}

//! Caps OpenMP fan-out; 0 leaves the runtime default.
void set_thread_limit(int threads);
int thread_limit();

} // namespace densityshape
