#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spectra1d {

/// Execution policy for sweep kernels. The serial path is the reference
/// implementation; the parallel path must produce identical results.
enum class Exec { serial, parallel };

/// Number of worker threads the parallel path may use. Respects the
/// SPECTRA_THREADS environment variable and set_thread_cap(), whichever is
/// smaller. Returns 1 when built without OpenMP.
std::size_t thread_budget();

/// Caps the thread budget at runtime (0 restores the default).
void set_thread_cap(std::size_t cap);

namespace detail {
void parallel_for_impl(std::size_t n, void* ctx, void (*body)(void*, std::size_t));
}

/// Runs body(i) for i in [0, n). Each index must be independent; results
/// written by index are identical under both policies and any thread count.
/// The first exception thrown by any element is rethrown on the caller.
template <class F>
void for_each_index(std::size_t n, F&& body, Exec mode = Exec::parallel) {
  if (mode == Exec::serial || thread_budget() <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first_error;
  std::atomic_flag error_claimed = ATOMIC_FLAG_INIT;
  auto guarded = [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      if (!error_claimed.test_and_set()) first_error = std::current_exception();
    }
  };
  using G = decltype(guarded);
  auto trampoline = [](void* ctx, std::size_t i) { (*static_cast<G*>(ctx))(i); };
  detail::parallel_for_impl(n, &guarded, trampoline);
  if (first_error) std::rethrow_exception(first_error);
}

/// Maps gen(i) over [0, n) into a vector, in parallel when allowed.
template <class T, class G>
std::vector<T> map_indexed(std::size_t n, G&& gen, Exec mode = Exec::parallel) {
  std::vector<T> out(n);
  for_each_index(
      n, [&](std::size_t i) { out[i] = gen(i); }, mode);
  return out;
}

}  // namespace spectra1d
