#pragma once

#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "qgl/spectral.hpp"

namespace qgl {

using BigInt = boost::multiprecision::cpp_int;
using Quad = boost::multiprecision::cpp_bin_float_quad;

// Floor of L^{3/2}, via isqrt(L^3).
BigInt floor_pow_three_halves(const BigInt& L);
inline BigInt next_scale(const BigInt& L) { return floor_pow_three_halves(L) + 1; }

// K(n) = n^n.
long long cluster_bound(int n);

struct ScheduleOptions {
  double q_minus = 0.0;
  int r0 = 1;
  bool strict = true;  // throw FeasibilityError instead of recording flags
};

struct ScheduleFlag {
  std::string constraint;  // "p_N", "mass_lower_bound", "mass_positive", "mass_decreasing"
  int index = -1;          // failing k (masses) or n (exponents)
  std::string detail;
};

struct ScaleSchedule {
  static constexpr double alpha = 1.5;
  static constexpr double beta = 0.5;
  static constexpr int J = 6;

  int N = 1;
  int d = 1;
  Quad p1 = 0;
  Quad theta = 0;
  std::vector<BigInt> L;   // L_0 .. L_K
  std::vector<Quad> m;     // m_{L_0} .. m_{L_K}
  std::vector<Quad> p;     // p_1 .. p_N
  std::vector<BigInt> r;   // r_{N, L_k}
  int r0 = 1;
  double q_minus = 0.0;
  double E_plus = 0.0;
  Quad eps0 = 0;
  std::vector<Interval> I;  // I_1 .. I_N
  bool p_feasible = false;
  bool mass_feasible = false;
  std::vector<ScheduleFlag> flags;

  int K() const { return static_cast<int>(L.size()) - 1; }
  bool feasible() const { return flags.empty(); }
  nlohmann::json to_json() const;
};

// p_n from p_1 by the exponent recursion; returns p_1 .. p_N.
std::vector<Quad> exponent_sequence(int N, int d, const Quad& p1);

ScaleSchedule build_schedule(int N, int d, const Quad& p1, const BigInt& L0, int K, const ScheduleOptions& opt = {});

// Smallest integer p_1 with p_N >= 3Nd + 1.
long long min_feasible_p1(int N, int d);

struct LimitMass {
  Quad m = 0;
  Quad m0 = 0;
  int terms = 0;         // scales summed before the tail bound took over
  Quad tail_bound = 0;   // bound on the neglected decrements
  bool largeness = false;  // mass lower-bound invariant holds at every scale
  bool half_bound = false; // m >= m0 / 2
  bool positive = false;
};

// lim m_{L_k}, summing the decrements past the schedule's last scale.
LimitMass limit_mass(const ScaleSchedule& s);

// Partial sums of sum_j L0^{-(alpha-1) alpha^j}.
std::vector<double> dominating_partial_sums(double L0, int terms);

struct IlsParams {
  int n = 1;
  int d = 1;
  double beta = 0.5;
  double xi = 1.0;
  double b = 1.0;
  double gamma = 1.0;
};

// log LHS - log RHS of the initial-scale inequality at L.
double ils_log_margin(const IlsParams& p, double L);
bool ils_constraint_check(double L, const IlsParams& p);
// Smallest L past which the inequality holds for every larger L, or nullopt.
std::optional<double> ils_threshold(const IlsParams& p);

}  // namespace qgl
