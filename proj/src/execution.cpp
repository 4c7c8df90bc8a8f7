#include "densityshape/execution.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace densityshape {

void set_thread_limit(int threads)
{
#ifdef _OPENMP
  if (threads > 0)
    omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

int thread_limit()
{
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

} // namespace densityshape
