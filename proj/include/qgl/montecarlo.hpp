#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

namespace qgl {

struct McEstimate {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  double p_hat = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 1.0;
  double rule_of_three = 0.0;  // one-sided 95% upper bound, set when successes == 0
  std::uint64_t seed = 0;

  static McEstimate from_counts(std::uint64_t successes, std::uint64_t trials, std::uint64_t seed);
  // p_hat, or the rule-of-three bound for zero-success cells.
  double upper_or_point() const { return successes == 0 ? rule_of_three : p_hat; }
  nlohmann::json to_json() const;
};

// Wilson score interval at 95%.
std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials);

// Pool size: QGRAPH_THREADS if set, else the available parallelism.
int worker_count();

// Runs body(i) for i in [0, count) on up to `threads` workers. Results must be
// written to per-index slots; the first failing index (lowest i) is rethrown.
template <class Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = count;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), count));
  for (int w = 0; w < n; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace qgl
