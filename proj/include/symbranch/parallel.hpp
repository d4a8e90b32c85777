#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>

namespace symbranch {

/// Execution policy for replica loops. `kSerial` is the reference path; both
/// policies must produce bit-identical results since every replica owns its
/// own RNG stream and writes only its own output slot.
enum class Exec { kSerial, kParallel };

template <class Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::kSerial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace symbranch
