#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace mhdbl {

// Worker count, capped by the MHDL_THREADS environment variable (default 1).
inline unsigned thread_count() {
  static const unsigned count = [] {
    const char* env = std::getenv("MHDL_THREADS");
    if (env == nullptr || *env == '\0') return 1u;
    try {
      const long v = std::stol(env);
      return v < 1 ? 1u : static_cast<unsigned>(v);
    } catch (...) {
      return 1u;
    }
  }();
  return count;
}

// Runs body(i) for i in [0, n). Iterations must be independent; results do not
// depend on the worker count since nothing is reduced across iterations.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const unsigned workers = std::min<std::size_t>(thread_count(), n == 0 ? 1 : n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mhdbl
