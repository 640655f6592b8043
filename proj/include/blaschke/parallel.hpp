#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace blaschke {

/// Worker count for internal parallel maps. BLASCHKE_THREADS caps it; the
/// default is the hardware concurrency.
inline int thread_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("BLASCHKE_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) n = std::min(n, cap);
    } catch (...) {
    }
  }
  return n;
}

/// Calls body(k) for k in [0, n). Iterations must be independent.
template <class Body>
void parallel_for(int n, Body&& body) {
  const int workers = std::min(thread_count(), n);
  if (workers <= 1 || n < 64) {
    for (int k = 0; k < n; ++k) body(k);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int k = w; k < n; k += workers) body(k);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace blaschke
