#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace pumpkit::par {

// Worker count from PUMPKIT_THREADS (default 1). Results never depend on the
// thread count: work items are independent and reductions happen in index
// order on the caller side.
inline int thread_count() {
  if (const char* env = std::getenv("PUMPKIT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

template <class F>
void parallel_for(int n, F&& body) {
  const int workers = std::min(thread_count(), n > 0 ? n : 1);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([w, n, workers, &body] {
      for (int i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace pumpkit::par
