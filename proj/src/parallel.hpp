#pragma once

#include "svmrk/types.hpp"

#include <exception>
#include <mutex>

namespace svmrk::detail {

/// Runs fn(k) for k in [0, n), serially or across the OpenMP team. The first
/// exception raised by any iteration is rethrown on the calling thread.
template <typename Fn>
void for_each_index(long n, Exec exec, Fn&& fn, int chunk = 16) {
  if (exec == Exec::Serial) {
    for (long k = 0; k < n; ++k) fn(k);
    return;
  }
  std::exception_ptr error;
  std::mutex lock;
#pragma omp parallel for schedule(dynamic, chunk)
  for (long k = 0; k < n; ++k) {
    if (error) continue;
    try {
      fn(k);
    } catch (...) {
      std::lock_guard<std::mutex> g(lock);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace svmrk::detail
