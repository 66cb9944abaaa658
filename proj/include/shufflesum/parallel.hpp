#pragma once

#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace shufflesum {

/// Worker count for trial-level parallelism: SHUFFLESUM_WORKERS when set,
/// otherwise the hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("SHUFFLESUM_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && v <= 1024) return static_cast<unsigned>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

/// Runs fn(t) for t in [0, trials). Each trial must touch only its own
/// slot (callers derive per-trial RNG streams), so the result is identical
/// for any worker count.
template <typename Fn>
void for_each_trial(std::uint64_t trials, Fn&& fn) {
  const unsigned workers = worker_count();
  if (workers <= 1 || trials < 4 * workers) {
    for (std::uint64_t t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::uint64_t t = w; t < trials; t += workers) fn(t);
    });
  }
  for (std::thread& th : pool) th.join();
}

}  // namespace shufflesum
