#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <vector>

namespace mfg {

/// Worker cap: MFG_MASTER_THREADS when set to a positive integer, else the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Runs task(i) for i in [0, count) on up to worker_count() threads and
/// returns the results in index order. The first failing index's exception
/// is rethrown after all workers finish.
template <class T>
std::vector<T> parallel_map(std::size_t count, const std::function<T(std::size_t)>& task);

namespace detail {
void run_indexed(std::size_t count, const std::function<void(std::size_t)>& body);
}

template <class T>
std::vector<T> parallel_map(std::size_t count, const std::function<T(std::size_t)>& task) {
  std::vector<T> out(count);
  std::vector<std::exception_ptr> errors(count);
  detail::run_indexed(count, [&](std::size_t i) {
    try {
      out[i] = task(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace mfg
