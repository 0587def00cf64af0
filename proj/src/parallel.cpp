#include "sns/parallel.hpp"

#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sns {

void for_each_sample(int count, int threads,
                     const std::function<void(int)>& fn) {
  std::exception_ptr first_error;
  std::mutex error_mutex;

#ifdef _OPENMP
  if (threads > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (int i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
    return;
  }
#endif
  (void)error_mutex;
  for (int i = 0; i < count; ++i) fn(i);
}

}  // namespace sns
