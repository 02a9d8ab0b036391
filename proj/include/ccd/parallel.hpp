#pragma once

#include "ccd/common.hpp"

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

namespace ccd {

/// Runs body(i) for i in [0, n). The parallel path uses a dynamic OpenMP schedule;
/// the first exception thrown by any iteration is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t n, Body&& body, Execution execution = Execution::parallel,
                  int workers = 0) {
  if (execution == Execution::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first;
  std::mutex guard;
  const int threads = workers > 0 ? workers : omp_get_max_threads();
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(guard);
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace ccd
