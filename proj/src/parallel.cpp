#include "spectra1d/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace spectra1d {

namespace {
std::atomic<std::size_t> g_thread_cap{0};

std::size_t env_thread_cap() {
  const char* v = std::getenv("SPECTRA_THREADS");
  if (!v) return 0;
  char* end = nullptr;
  long n = std::strtol(v, &end, 10);
  if (end == v || n <= 0) return 0;
  return static_cast<std::size_t>(n);
}
}  // namespace

std::size_t thread_budget() {
#ifdef _OPENMP
  std::size_t budget = static_cast<std::size_t>(omp_get_max_threads());
#else
  std::size_t budget = 1;
#endif
  if (std::size_t env = env_thread_cap(); env > 0 && env < budget) budget = env;
  std::size_t cap = g_thread_cap.load(std::memory_order_relaxed);
  if (cap > 0 && cap < budget) budget = cap;
  return budget;
}

void set_thread_cap(std::size_t cap) {
  g_thread_cap.store(cap, std::memory_order_relaxed);
}

namespace detail {

void parallel_for_impl(std::size_t n, void* ctx, void (*body)(void*, std::size_t)) {
#ifdef _OPENMP
  const int nt = static_cast<int>(thread_budget());
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    body(ctx, static_cast<std::size_t>(i));
  }
#else
  for (std::size_t i = 0; i < n; ++i) body(ctx, i);
#endif
}

}  // namespace detail
}  // namespace spectra1d
