#include <cstdlib>
#include <mutex>

#include "pluriflow/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pluriflow {

void configure_threads() {
  static std::once_flag once;
  std::call_once(once, [] {
#ifdef _OPENMP
    if (const char* env = std::getenv("PLURIFLOW_THREADS")) {
      const int cap = std::atoi(env);
      if (cap > 0) omp_set_num_threads(cap);
    }
#endif
  });
}

}  // namespace pluriflow
