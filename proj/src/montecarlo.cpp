#include "qgl/montecarlo.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace qgl {

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials) {
  if (trials == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

McEstimate McEstimate::from_counts(std::uint64_t successes, std::uint64_t trials, std::uint64_t seed) {
  McEstimate e;
  e.trials = trials;
  e.successes = successes;
  e.seed = seed;
  e.p_hat = trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
  auto [lo, hi] = wilson_interval(successes, trials);
  e.wilson_lo = std::min(lo, e.p_hat);
  e.wilson_hi = std::max(hi, e.p_hat);
  if (successes == 0 && trials > 0) e.rule_of_three = 3.0 / static_cast<double>(trials);
  return e;
}

nlohmann::json McEstimate::to_json() const {
  nlohmann::json j{{"trials", trials},      {"successes", successes}, {"p_hat", p_hat},
                   {"wilson_lo", wilson_lo}, {"wilson_hi", wilson_hi}, {"seed", seed}};
  if (successes == 0) j["rule_of_three"] = rule_of_three;
  return j;
}

int worker_count() {
  if (const char* env = std::getenv("QGRAPH_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return v;
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace qgl
