#pragma once

#include <atomic>
#include <thread>
#include <vector>

namespace ns2d {

/// Runs fn(i) for i in [0, n) on n_threads workers and returns the results
/// indexed by i. Each call owns its slot, so the output is independent of
/// scheduling; reductions over the returned vector must iterate in index
/// order to keep floating-point accumulation deterministic.
template <class R, class Fn>
std::vector<R> parallel_map(int n, int n_threads, Fn&& fn) {
  std::vector<R> out(static_cast<std::size_t>(n));
  if (n == 0) return out;
  n_threads = std::max(1, std::min(n_threads, n));
  if (n_threads == 1) {
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(i);
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(n_threads));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
  for (int w = 0; w < n_threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= n) break;
          out[static_cast<std::size_t>(i)] = fn(i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
        next.store(n);
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace ns2d
