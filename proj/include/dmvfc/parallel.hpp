#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace dmvfc {

// Worker cap: DMVFC_THREADS when set, else hardware concurrency, at least 1.
inline int worker_count() {
  if (const char* env = std::getenv("DMVFC_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 1;
}

// Static block partition over [0, n). Safe only for bodies with disjoint
// writes; the result must not depend on scheduling.
inline void parallel_for(std::int64_t n,
                         const std::function<void(std::int64_t)>& body) {
  const int workers = std::min<std::int64_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 1; w < workers; ++w) {
    const std::int64_t lo = w * chunk, hi = std::min(n, lo + chunk);
    pool.emplace_back([lo, hi, &body] {
      for (std::int64_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (std::int64_t i = 0; i < std::min(n, chunk); ++i) body(i);
  for (auto& t : pool) t.join();
}

}  // namespace dmvfc
