#pragma once

#include <cstdint>
#include <exception>
#include <limits>
#include <vector>

namespace qsdlab {

// Serial runs the same loop body in index order; it is the reference the
// OpenMP path is tested against.
enum class ExecPolicy { Serial, Parallel };

// Runs body(i) for i in [0, n). Exceptions are captured per index and the one
// with the lowest index is rethrown, so failures are deterministic too.
template <class Body>
void for_each_index(std::int64_t n, ExecPolicy policy, Body&& body) {
  std::exception_ptr first;
  std::int64_t first_idx = std::numeric_limits<std::int64_t>::max();
  if (policy == ExecPolicy::Serial) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(qsdlab_for_each_index)
      if (i < first_idx) {
        first_idx = i;
        first = std::current_exception();
      }
    }
  }
  if (first) std::rethrow_exception(first);
}

// Like for_each_index, with one local object per worker built by make_local()
// (for scratch buffers that must not be shared). body(local, i).
template <class MakeLocal, class Body>
void for_each_index_local(std::int64_t n, ExecPolicy policy, MakeLocal&& make_local, Body&& body) {
  if (policy == ExecPolicy::Serial) {
    auto local = make_local();
    for (std::int64_t i = 0; i < n; ++i) body(local, i);
    return;
  }
  std::exception_ptr first;
  std::int64_t first_idx = std::numeric_limits<std::int64_t>::max();
#pragma omp parallel
  {
    auto local = make_local();
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        body(local, i);
      } catch (...) {
#pragma omp critical(qsdlab_for_each_index)
        if (i < first_idx) {
          first_idx = i;
          first = std::current_exception();
        }
      }
    }
  }
  if (first) std::rethrow_exception(first);
}

// Sets the OpenMP thread count (no-op if n <= 0).
void set_workers(int n);
int workers();

}  // namespace qsdlab
