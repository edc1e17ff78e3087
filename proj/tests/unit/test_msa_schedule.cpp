#include <cmath>
#include <vector>

#include "doctest.h"
#include "qgl/errors.hpp"
#include "qgl/msa_schedule.hpp"

using namespace qgl;

namespace {

// p_n = p_{n-1} / (alpha^2 (1 + theta)) - (2n - 1) d / (2 alpha) - n d - 1 in long double.
long double p_last(int N, int d, long double p1) {
  const long double alpha = 1.5L, theta = 1.0L / (2 * p1);
  long double p = p1;
  for (int n = 2; n <= N; ++n) p = p / (alpha * alpha * (1 + theta)) - (2.0L * n - 1) * d / (2 * alpha) - n * d - 1;
  return p;
}

}  // namespace

TEST_CASE("scale recursion") {
  CHECK(next_scale(BigInt(1000)) == 31623);
  CHECK(floor_pow_three_halves(BigInt(81)) == 729);
  CHECK(floor_pow_three_halves(BigInt(4)) == 8);
  const BigInt big("1000000000000000000000");
  const BigInt f = floor_pow_three_halves(big);
  CHECK(f * f <= big * big * big);
  CHECK((f + 1) * (f + 1) > big * big * big);
  CHECK(cluster_bound(3) == 27);
}

TEST_CASE("initial mass and monotone decrease") {
  ScheduleOptions opt;
  opt.strict = false;
  const ScaleSchedule s = build_schedule(1, 1, Quad(4), BigInt(81), 4, opt);
  CHECK(static_cast<double>(s.m[0]) == doctest::Approx(1.0 / 9).epsilon(1e-15));
  REQUIRE(s.L.size() == 5);
  CHECK(s.L[1] == 730);
  CHECK(static_cast<double>(s.eps0) == doctest::Approx(1.0 / 18));

  const ScaleSchedule big = build_schedule(1, 1, Quad(4), BigInt("1000000000000"), 4, opt);
  CHECK(big.feasible());
  for (int k = 0; k < big.K(); ++k) CHECK(big.m[k + 1] < big.m[k]);
}

TEST_CASE("exponent recursion") {
  const auto p = exponent_sequence(2, 1, Quad(2000));
  CHECK(static_cast<double>(p[1]) == doctest::Approx(884.67).epsilon(1e-5));
  CHECK(static_cast<double>(p[1]) == doctest::Approx(static_cast<double>(p_last(2, 1, 2000))).epsilon(1e-15));
  const ScaleSchedule s = build_schedule(2, 1, Quad(2000), BigInt(81), 1, {0.0, 1, false});
  CHECK(static_cast<double>(s.theta) == doctest::Approx(0.00025));
  CHECK(s.p_feasible);
}

TEST_CASE("smallest feasible p1") {
  for (int d = 1; d <= 3; ++d) CHECK(min_feasible_p1(1, d) == 3 * d + 1);
  const long long p = min_feasible_p1(2, 1);
  CHECK(p_last(2, 1, p) >= 7);
  CHECK(p_last(2, 1, p - 1) < 7);
  for (int d = 1; d <= 3; ++d) {
    CHECK(min_feasible_p1(2, d) > min_feasible_p1(1, d));
    CHECK(min_feasible_p1(3, d) > min_feasible_p1(2, d));
    const long long p3 = min_feasible_p1(3, d);
    CHECK(p_last(3, d, p3) >= 9 * d + 1);
    CHECK(p_last(3, d, p3 - 1) < 9 * d + 1);
  }
}

TEST_CASE("infeasible schedules are flagged or rejected") {
  CHECK_THROWS_AS(build_schedule(2, 1, Quad(26), BigInt(81), 4), FeasibilityError);
  ScheduleOptions opt;
  opt.strict = false;
  const ScaleSchedule s = build_schedule(2, 1, Quad(26), BigInt(81), 4, opt);
  CHECK_FALSE(s.feasible());
  CHECK(s.flags.front().constraint == "mass_lower_bound");
  CHECK(s.to_json()["scales"].size() == 5);
  CHECK_THROWS_AS(limit_mass(s), PreconditionError);
}

TEST_CASE("limit mass of a feasible schedule") {
  const ScaleSchedule s = build_schedule(1, 1, Quad(4), BigInt("1000000000000"), 3);
  const LimitMass lm = limit_mass(s);
  CHECK(lm.positive);
  CHECK(lm.largeness);
  CHECK(lm.half_bound);
  CHECK(lm.m >= s.m.front() / 2);
  for (const Quad& mk : s.m) CHECK(lm.m <= mk);
}

TEST_CASE("dominating series converges") {
  for (double L0 : {16.0, 81.0, 1000.0}) {
    const auto sums = dominating_partial_sums(L0, 12);
    for (std::size_t j = 1; j < sums.size(); ++j) CHECK(sums[j] >= sums[j - 1]);
    CHECK(sums[1] > sums[0]);
    CHECK(sums[9] - sums[8] < 1e-12 * sums[9]);
  }
}

TEST_CASE("initial-scale inequality threshold") {
  IlsParams p;
  p.gamma = 1.0;
  const auto t = ils_threshold(p);
  REQUIRE(t.has_value());
  CHECK(ils_constraint_check(*t, p));
  CHECK_FALSE(ils_constraint_check(*t - 1, p));
  CHECK(ils_constraint_check(*t * 10, p));

  IlsParams weak = p;
  weak.xi = 0.0;
  const auto tw = ils_threshold(weak);
  REQUIRE(tw.has_value());
  CHECK(*tw <= *t);

  IlsParams none = p;
  none.gamma = 0.0;
  CHECK_FALSE(ils_threshold(none).has_value());
  for (double L : {10.0, 1e4, 1e12}) CHECK_FALSE(ils_constraint_check(L, none));
}
